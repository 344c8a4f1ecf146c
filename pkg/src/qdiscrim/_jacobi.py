"""Cyclic Jacobi kernels for dense complex Hermitian matrices.

Each rotation first removes the phase of the pivot a[p, q] with a diagonal
unitary and then applies the classic real Jacobi rotation, so the combined
2x2 unitary is

    J = [[c,             s            ],
         [-s * conj(ph), c * conj(ph) ]]     with ph = a[p, q] / |a[p, q]|

and the update is A <- J^H A J.  Sweeps visit (p, q) in row-major order, which
makes the result a deterministic function of the input.
"""

import numpy as np
from numba import njit

# off-diagonal Frobenius norm, relative to the full Frobenius norm, at which a
# matrix counts as diagonal
OFFDIAG_RTOL = 1e-14


@njit(cache=True)
def _rotate(a, v, p, q, with_vectors):
    n = a.shape[0]
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return
    app = a[p, p].real
    aqq = a[q, q].real
    # negligible pivot next to both diagonal entries: drop it outright
    if abs(app) + 1e3 * r == abs(app) and abs(aqq) + 1e3 * r == abs(aqq):
        a[p, q] = 0.0
        a[q, p] = 0.0
        return
    ph = apq / r
    theta = (aqq - app) / (2.0 * r)
    if theta == 0.0:
        t = 1.0
    else:
        t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    jpp = c + 0j
    jpq = s + 0j
    jqp = -s * np.conj(ph)
    jqq = c * np.conj(ph)
    for k in range(n):
        akp = a[k, p]
        akq = a[k, q]
        a[k, p] = akp * jpp + akq * jqp
        a[k, q] = akp * jpq + akq * jqq
    for k in range(n):
        apk = a[p, k]
        aqk = a[q, k]
        a[p, k] = np.conj(jpp) * apk + np.conj(jqp) * aqk
        a[q, k] = np.conj(jpq) * apk + np.conj(jqq) * aqk
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = app - t * r
    a[q, q] = aqq + t * r
    if with_vectors:
        for k in range(n):
            vkp = v[k, p]
            vkq = v[k, q]
            v[k, p] = vkp * jpp + vkq * jqp
            v[k, q] = vkp * jpq + vkq * jqq


@njit(cache=True)
def jacobi_inplace(a, v, max_sweeps, with_vectors):
    """Diagonalise ``a`` in place, accumulating rotations into ``v``.

    Returns the number of sweeps used, or -1 when ``max_sweeps`` ran out.
    """
    n = a.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i, j].real ** 2 + a[i, j].imag ** 2
    limit = (OFFDIAG_RTOL ** 2) * total
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * (a[p, q].real ** 2 + a[p, q].imag ** 2)
        if off <= limit:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q, with_vectors)
    return -1


@njit(cache=True)
def batched_eigenvalues(stack, max_sweeps):
    """Eigenvalues (unsorted) of every matrix in a (k, n, n) stack.

    Returns ``(values, ok)`` where ``ok`` is False if any matrix failed to
    converge.
    """
    k, n, _ = stack.shape
    out = np.empty((k, n))
    dummy = np.empty((1, 1), dtype=np.complex128)
    ok = True
    for b in range(k):
        a = stack[b].copy()
        if jacobi_inplace(a, dummy, max_sweeps, False) < 0:
            ok = False
        for i in range(n):
            out[b, i] = a[i, i].real
    return out, ok


@njit(cache=True)
def one_sided_singular_values(x, max_sweeps):
    """Singular values of ``x`` (unsorted) by one-sided Hestenes-Jacobi.

    Column pairs are rotated until mutually orthogonal; the singular values
    are then the column norms.  Small singular values come out with absolute
    accuracy of order eps * ||x||, unlike square roots of eigenvalues of
    ``x^H x``.  Returns ``(values, sweeps)`` with ``sweeps = -1`` on failure.
    """
    x = x.copy()
    m, n = x.shape
    values = np.empty(n)
    fro2 = 0.0
    for i in range(m):
        for j in range(n):
            fro2 += x[i, j].real ** 2 + x[i, j].imag ** 2
    # overlaps below this are rounding noise at the scale of x
    floor = (OFFDIAG_RTOL ** 2) * fro2
    for sweep in range(max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0j
                for k in range(m):
                    alpha += x[k, p].real ** 2 + x[k, p].imag ** 2
                    beta += x[k, q].real ** 2 + x[k, q].imag ** 2
                    gamma += np.conj(x[k, p]) * x[k, q]
                g = abs(gamma)
                if g <= floor or g <= OFFDIAG_RTOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                # rephase column q so the overlap is real, then rotate
                ph = np.conj(gamma) / g
                zeta = (beta - alpha) / (2.0 * g)
                t = 1.0 / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for k in range(m):
                    xp = x[k, p]
                    xq = x[k, q] * ph
                    x[k, p] = c * xp - s * xq
                    x[k, q] = s * xp + c * xq
        if not rotated:
            for j in range(n):
                acc = 0.0
                for k in range(m):
                    acc += x[k, j].real ** 2 + x[k, j].imag ** 2
                values[j] = np.sqrt(acc)
            return values, sweep
    return values, -1
