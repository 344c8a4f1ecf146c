"""Dense Hermitian-operator numerics.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``.  Every
spectral quantity goes through :func:`hermitian_eig`, a cyclic Jacobi solver,
so results are reproducible bit-for-bit on a given machine.

Thresholds
----------
Two tolerances recur:

* ``eig_threshold`` decides which eigenvalues count as zero.  The default is
  ``1e-10 * max(1, max|lambda|)`` and it is shared by :func:`jordan_decompose`
  and :func:`support_projector` so supports and positive parts always agree.
* ``psd_tol`` decides how negative an eigenvalue may be before an operator
  that should be positive semidefinite is rejected.  It is relative to the
  largest eigenvalue magnitude.  Eigenvalues in ``[-psd_tol * scale, 0)`` are
  clamped to zero wherever a square root is taken.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _jacobi
from .errors import (
    DimensionMismatch,
    NoConvergence,
    NonHermitian,
    NotPSD,
    NumericalHealthWarning,
    SingularState,
)

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-8
EIG_RTOL = 1e-10
RANK_TOL = 1e-10
MAX_SWEEPS = 100
REGULARIZATION_EPS = 1e-8


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues sorted descending; eigenvectors are the matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True, eq=False)
class JordanDecomposition:
    """``H = positive_part - negative_part`` with orthogonal supports.

    ``neg_eigenvalues`` are stored as positive numbers.  ``pos_vectors`` and
    ``neg_vectors`` hold orthonormal bases of the two eigenspaces as columns;
    ``eigenvalues`` keeps the full spectrum, including the discarded near-zero
    part, so :attr:`trace_norm` is exact.
    """

    positive_part: np.ndarray
    negative_part: np.ndarray
    pos_projector: np.ndarray
    neg_projector: np.ndarray
    pos_eigenvalues: np.ndarray
    neg_eigenvalues: np.ndarray
    pos_vectors: np.ndarray
    neg_vectors: np.ndarray
    threshold: float
    eigenvalues: np.ndarray

    @property
    def trace_norm(self) -> float:
        return float(np.sum(np.abs(self.eigenvalues)))


@dataclass(frozen=True, eq=False)
class FidelityBasis:
    value: float
    e: np.ndarray
    f: np.ndarray
    basis: np.ndarray
    regularized: bool = False


def as_matrix(a, name: str = "operator") -> np.ndarray:
    """Return ``a`` as a square complex128 array or raise DimensionMismatch."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def hermiticity_residual(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def as_hermitian(a, tol: float = HERMITICITY_TOL, name: str = "operator") -> np.ndarray:
    """Validate Hermiticity and return the exactly symmetrised matrix."""
    arr = as_matrix(a, name)
    res = hermiticity_residual(arr)
    if not res <= tol:
        raise NonHermitian(f"{name} is not Hermitian: max |H - H^dagger| = {res:.3g} > {tol:g}")
    return hermitize(arr)


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"operator shapes differ: {a.shape} vs {b.shape}")


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # first component above noise level becomes real positive
    if vecs.size == 0:
        return vecs
    mags = np.abs(vecs)
    first = np.argmax(mags > 1e-12 * mags.max(axis=0), axis=0)
    z = vecs[first, np.arange(vecs.shape[1])]
    return vecs * (np.conj(z) / np.abs(z))


def hermitian_eig(h, *, hermiticity_tol: float = HERMITICITY_TOL, max_sweeps: int = MAX_SWEEPS) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Raises:
        NonHermitian: if ``max |H - H^dagger|`` exceeds ``hermiticity_tol``.
        NoConvergence: if the off-diagonal mass has not vanished after
            ``max_sweeps`` sweeps.
    """
    a = np.ascontiguousarray(as_hermitian(h, hermiticity_tol))
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if _jacobi.jacobi_inplace(a, v, max_sweeps, True) < 0:
        raise NoConvergence(f"Jacobi did not converge within {max_sweeps} sweeps (n={n})")
    w = a.diagonal().real.copy()
    order = np.argsort(-w, kind="stable")
    return EigenSystem(w[order], _fix_phases(v[:, order]))


def eigvalsh(h, **kwargs) -> np.ndarray:
    """Eigenvalues only, sorted descending."""
    return hermitian_eig(h, **kwargs).eigenvalues


def batched_eigvalsh(stack: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Unsorted eigenvalues of a ``(k, n, n)`` stack of Hermitian matrices.

    The stack is symmetrised but not validated; intended for hot loops that
    build the matrices themselves.
    """
    stack = np.asarray(stack, dtype=np.complex128)
    stack = np.ascontiguousarray(0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2))))
    values, ok = _jacobi.batched_eigenvalues(stack, max_sweeps)
    if not ok:
        raise NoConvergence(f"Jacobi did not converge within {max_sweeps} sweeps")
    return values


def default_threshold(eigenvalues: np.ndarray) -> float:
    scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    return EIG_RTOL * max(1.0, scale)


def _psd_floor(eigenvalues: np.ndarray, psd_tol: float) -> float:
    scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    return -psd_tol * scale


def _require_psd(es: EigenSystem, psd_tol: float, name: str) -> None:
    lo = float(es.eigenvalues[-1])
    if lo < _psd_floor(es.eigenvalues, psd_tol):
        raise NotPSD(f"{name} is not positive semidefinite: min eigenvalue {lo:.3g}")


def _outer_sum(vecs: np.ndarray, weights=None) -> np.ndarray:
    if weights is None:
        return vecs @ vecs.conj().T
    return (vecs * weights) @ vecs.conj().T


def trace_norm(h) -> float:
    """Tr|H| for Hermitian ``H``: the sum of absolute eigenvalues."""
    return float(np.sum(np.abs(eigvalsh(h))))


def jordan_decompose(h, eig_threshold: float | None = None) -> JordanDecomposition:
    """Split Hermitian ``H`` into orthogonally supported positive parts.

    Eigenvalues with ``|lambda| <= eig_threshold`` belong to neither part.
    """
    es = hermitian_eig(h)
    w, v = es.eigenvalues, es.eigenvectors
    thr = default_threshold(w) if eig_threshold is None else float(eig_threshold)
    if thr < 0:
        raise ValueError("eig_threshold must be non-negative")
    pos, neg = w > thr, w < -thr
    vp, vn = v[:, pos], v[:, neg]
    return JordanDecomposition(
        positive_part=_outer_sum(vp, w[pos]),
        negative_part=_outer_sum(vn, -w[neg]),
        pos_projector=_outer_sum(vp),
        neg_projector=_outer_sum(vn),
        pos_eigenvalues=w[pos],
        neg_eigenvalues=-w[neg][::-1],
        pos_vectors=vp,
        neg_vectors=vn[:, ::-1],
        threshold=thr,
        eigenvalues=w,
    )


def psd_sqrt_and_eig(h, psd_tol: float = PSD_TOL, name: str = "operator"):
    es = hermitian_eig(h)
    _require_psd(es, psd_tol, name)
    w = np.clip(es.eigenvalues, 0.0, None)
    return _outer_sum(es.eigenvectors, np.sqrt(w)), es


def matrix_sqrt(h, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Positive square root of a PSD matrix (small negative eigenvalues clamped).

    >>> np.allclose(matrix_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    True
    """
    return psd_sqrt_and_eig(h, psd_tol)[0]


def fidelity(a, b, *, psd_tol: float = PSD_TOL, check_symmetry: bool = False) -> float:
    """Tr sqrt(A^{1/2} B A^{1/2}) for PSD ``A`` and ``B`` (no trace normalisation).

    With ``check_symmetry`` the reversed argument order is also evaluated and a
    :class:`NumericalHealthWarning` is issued if the two differ by more than
    1e-8.  The returned value is never symmetrised.
    """
    a = as_hermitian(a, name="A")
    b = as_hermitian(b, name="B")
    _check_same_dim(a, b)
    value = _fidelity(a, b, psd_tol)
    if check_symmetry:
        other = _fidelity(b, a, psd_tol)
        if abs(value - other) > 1e-8:
            warnings.warn(
                f"fidelity asymmetry {abs(value - other):.3g} exceeds 1e-8",
                NumericalHealthWarning,
                stacklevel=2,
            )
    return value


def _support_factor(es: EigenSystem, thr: float) -> np.ndarray:
    """``L`` with ``L L^dagger`` equal to the operator restricted to its support."""
    keep = es.eigenvalues > thr
    return es.eigenvectors[:, keep] * np.sqrt(es.eigenvalues[keep])


def _fidelity(a: np.ndarray, b: np.ndarray, psd_tol: float) -> float:
    # F = ||A^{1/2} B^{1/2}||_1 = nuclear norm of L_A^dagger L_B.  Working on the
    # supports keeps eigenvalue noise of rank-deficient inputs (~1e-17, whose
    # square roots are ~3e-9) out of the result.
    ea, eb = hermitian_eig(a), hermitian_eig(b)
    _require_psd(ea, psd_tol, "A")
    _require_psd(eb, psd_tol, "B")
    scale = max(float(np.max(np.abs(ea.eigenvalues))), float(np.max(np.abs(eb.eigenvalues))))
    thr = EIG_RTOL * scale
    x = _support_factor(ea, thr).conj().T @ _support_factor(eb, thr)
    if x.size == 0:
        return 0.0
    return float(np.sum(singular_values(x)))


def singular_values(x) -> np.ndarray:
    """Singular values, sorted descending, by one-sided Jacobi."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {x.shape}")
    if x.shape[0] < x.shape[1]:
        x = x.conj().T
    values, sweeps = _jacobi.one_sided_singular_values(np.ascontiguousarray(x), MAX_SWEEPS)
    if sweeps < 0:
        raise NoConvergence(f"one-sided Jacobi did not converge within {MAX_SWEEPS} sweeps")
    return np.sort(values)[::-1]


def trace_distance(a, b) -> float:
    """D(A, B) = Tr|A - B| / 2."""
    a = as_hermitian(a, name="A")
    b = as_hermitian(b, name="B")
    _check_same_dim(a, b)
    return 0.5 * trace_norm(a - b)


def support_projector(h, eig_threshold: float | None = None, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Orthogonal projector onto the support of a PSD operator."""
    es = hermitian_eig(h)
    _require_psd(es, psd_tol, "operator")
    thr = default_threshold(es.eigenvalues) if eig_threshold is None else float(eig_threshold)
    return _outer_sum(es.eigenvectors[:, es.eigenvalues > thr])


def fidelity_eigenbasis(
    rho_i,
    rho_j,
    *,
    regularize: bool = False,
    rank_tol: float = RANK_TOL,
    psd_tol: float = PSD_TOL,
) -> FidelityBasis:
    """Fidelity as a classical overlap sum in a measurement basis.

    The basis is the eigenbasis of the operator
    ``M = rho_j^{-1/2} (rho_j^{1/2} rho_i rho_j^{1/2})^{1/2} rho_j^{-1/2}``
    (the unique PSD solution of ``M rho_j M = rho_i``).  With ``e_l`` and
    ``f_l`` the diagonals of ``rho_i`` and ``rho_j`` in that basis,
    ``sum_l sqrt(e_l f_l)`` equals ``F(rho_i, rho_j)``.

    ``rho_j`` must be invertible.  A singular ``rho_j`` raises
    :class:`SingularState` unless ``regularize`` is set, in which case it is
    replaced by ``(1 - eps) rho_j + eps I / d`` with ``eps = 1e-8`` and the
    result is flagged.
    """
    ri = as_hermitian(rho_i, name="rho_i")
    rj = as_hermitian(rho_j, name="rho_j")
    _check_same_dim(ri, rj)
    d = rj.shape[0]
    sj, es = psd_sqrt_and_eig(rj, psd_tol, "rho_j")
    regularized = False
    if es.eigenvalues[-1] < rank_tol:
        if not regularize:
            raise SingularState(f"rho_j has eigenvalue {es.eigenvalues[-1]:.3g} below {rank_tol:g}")
        eps = REGULARIZATION_EPS
        rj = (1 - eps) * rj + eps * np.eye(d) / d
        sj, es = psd_sqrt_and_eig(rj, psd_tol, "rho_j")
        regularized = True
    w = np.clip(es.eigenvalues, 0.0, None)
    sj_inv = _outer_sum(es.eigenvectors, 1.0 / np.sqrt(w))
    middle = matrix_sqrt(hermitize(sj @ ri @ sj), psd_tol)
    m_op = hermitize(sj_inv @ middle @ sj_inv)
    basis = hermitian_eig(m_op).eigenvectors
    e = np.einsum("kl,km,ml->l", basis.conj(), ri, basis).real
    f = np.einsum("kl,km,ml->l", basis.conj(), rj, basis).real
    value = float(np.sum(np.sqrt(np.clip(e, 0, None) * np.clip(f, 0, None))))
    return FidelityBasis(value=value, e=e, f=f, basis=basis, regularized=regularized)


def fact1_gap(a, b) -> float:
    """D(A, B) - [(Tr A + Tr B)/2 - F(A, B)], non-negative for PSD inputs."""
    a = as_hermitian(a, name="A")
    b = as_hermitian(b, name="B")
    _check_same_dim(a, b)
    tr = 0.5 * (np.trace(a).real + np.trace(b).real)
    return trace_distance(a, b) - (tr - fidelity(a, b))


def min_eigenvalue(h) -> float:
    return float(eigvalsh(h)[-1])


def is_psd(h, psd_tol: float = PSD_TOL) -> bool:
    w = eigvalsh(h)
    return bool(w[-1] >= _psd_floor(w, psd_tol))


def pinv_sqrt(h, eig_threshold: float | None = None):
    """Pseudo-inverse square root of a PSD matrix on its support.

    Returns ``(h^{-1/2} on support, projector onto the kernel)``.
    """
    es = hermitian_eig(h)
    w, v = es.eigenvalues, es.eigenvectors
    thr = default_threshold(w) if eig_threshold is None else eig_threshold
    keep = w > thr
    inv = _outer_sum(v[:, keep], 1.0 / np.sqrt(w[keep]))
    return inv, _outer_sum(v[:, ~keep])


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
