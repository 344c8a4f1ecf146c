"""Independent numerical optimum of the minimum-error problem.

The optimiser is the multiplicative fixed-point iteration

    M     = sum_j G_j Pi_j G_j,        G_j = eta_j rho_j
    Pi_i <- M^{-1/2} G_i Pi_i G_i M^{-1/2}

which preserves ``sum_i Pi_i = I`` on the support of ``M``.  Directions
outside that support are shared equally among the elements.

The iteration is slow when some ``Lambda_ij`` has an eigenvalue near zero.
Every ``EXTRAPOLATE_EVERY`` iterations the last step ``D = Pi_new - Pi_old``
is therefore extended: the success probability is linear along ``D`` and
``sum_i D_i = 0``, so ``Pi_new + t D`` stays a better POVM as long as all
elements remain PSD.  ``t`` is doubled until positivity breaks and half of
the last feasible value is used, which keeps the iterate in the interior.

Each restart runs until the success probability changes by less than
``tol``, then keeps iterating (within ``max_iters``) while the optimality
certificate fails.
Since the problem is a semidefinite program, a passing certificate means a
global optimum, so later restarts are skipped unless
``stop_on_certificate=False``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensembles import GeneratorSpec, WeightedEnsemble, derive_seed, generate, save
from .errors import NoProgress
from .linalg import batched_eigvalsh, hermitize, pinv_sqrt
from .measurement import (
    CERT_TOL,
    ORTHO_TOL,
    Certificate,
    ConditionReport,
    Povm,
    check_corollary1_conditions,
    error_probability,
    hykl_certificate,
)
from .measurement import to_document as povm_document

log = logging.getLogger(__name__)

DECREASE_TOL = 1e-8
EXTRAPOLATE_EVERY = 5
EXTRAPOLATE_SLACK = 1e-12
EXTRAPOLATE_MAX = 2.0**30


@dataclass(frozen=True)
class OracleResult:
    q_star: float
    povm: Povm
    iterations: int
    certificate: Certificate
    restarts_used: int
    best_restart: int = 0

    def to_dict(self) -> dict:
        return {
            "q_star": self.q_star,
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
            "best_restart": self.best_restart,
            "certificate": self.certificate.to_dict(),
            "povm": povm_document(self.povm),
        }


def _success(weighted, elements) -> float:
    return sum(float(np.einsum("ab,ba->", g, p).real) for g, p in zip(weighted, elements))


def _step(weighted, elements):
    m = len(weighted)
    big_m = hermitize(sum(g @ p @ g for g, p in zip(weighted, elements)))
    inv, kernel = pinv_sqrt(big_m)
    out = []
    for g, p in zip(weighted, elements):
        x = inv @ g @ p @ g @ inv + kernel / m
        out.append(hermitize(x))
    return out


def _extrapolate(old, new):
    base = np.stack(new)
    step = base - np.stack(old)
    # force sum_i D_i = 0 exactly so a large t cannot amplify rounding in it
    step[-1] = -step[:-1].sum(axis=0)
    floor = min(0.0, float(batched_eigvalsh(base).min())) - EXTRAPOLATE_SLACK
    t_ok, t = 0.0, 1.0
    while t <= EXTRAPOLATE_MAX:
        if float(batched_eigvalsh(base + t * step).min()) < floor:
            break
        t_ok, t = t, 2 * t
    if t_ok == 0.0:
        return new
    return [hermitize(x) for x in base + (0.5 * t_ok) * step]


def _random_start(rng: np.random.Generator, m: int, d: int):
    xs = []
    for _ in range(m):
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        xs.append(z @ z.conj().T)
    inv, kernel = pinv_sqrt(hermitize(sum(xs)))
    return [hermitize(inv @ x @ inv + kernel / m) for x in xs]


def _run(weighted, elements, e, max_iters, tol, cert_tol):
    s = _success(weighted, elements)
    it = 0
    converged_at = None
    while it < max_iters:
        new = _step(weighted, elements)
        it += 1
        if it % EXTRAPOLATE_EVERY == 0:
            new = _extrapolate(elements, new)
        s_new = _success(weighted, new)
        if s_new < s - DECREASE_TOL:
            raise NoProgress(f"success probability fell from {s:.15g} to {s_new:.15g} at iteration {it}")
        delta = abs(s_new - s)
        elements, s = new, s_new
        if delta >= tol:
            continue
        if converged_at is None:
            converged_at = it
        if delta == 0.0:
            break
        # polishing phase: certificate checked every 10 iterations
        if (it - converged_at) % 10 == 0 and hykl_certificate(e, Povm(tuple(elements)), cert_tol).optimal:
            break
    return elements, s, it


def optimize_min_error(
    e: WeightedEnsemble,
    *,
    max_iters: int = 2000,
    tol: float = 1e-9,
    restarts: int = 8,
    seed: int = 0,
    cert_tol: float = CERT_TOL,
    stop_on_certificate: bool = True,
) -> OracleResult:
    """Numerically optimal minimum error probability with its POVM.

    Restart 0 starts from ``Pi_i = I/m``; the others from random PSD
    resolutions of the identity seeded by ``seed`` and the restart index.
    Ties between restarts go to the lower restart index.

    Raises:
        NoProgress: every restart hit an iterate that lowered the success
            probability by more than 1e-8.
    """
    weighted = [e.weighted(i) for i in range(e.m)]
    m, d = e.m, e.dim
    best = None
    total_iters = 0
    used = 0
    failures = []
    for r in range(max(1, restarts)):
        if r == 0:
            start = [np.eye(d, dtype=np.complex128) / m for _ in range(m)]
        else:
            start = _random_start(np.random.default_rng(derive_seed(seed, "oracle-restart", r)), m, d)
        used += 1
        try:
            elements, s, it = _run(weighted, start, e, max_iters, tol, cert_tol)
        except NoProgress as exc:
            log.warning("restart %d abandoned: %s", r, exc)
            failures.append(exc)
            continue
        total_iters += it
        povm = Povm(tuple(elements))
        cert = hykl_certificate(e, povm, cert_tol)
        if best is None or s > best[0]:
            best = (s, povm, cert, r)
        if stop_on_certificate and cert.optimal:
            break
    if best is None:
        raise NoProgress(f"all {used} restarts failed: {failures[-1]}")
    s, povm, cert, r = best
    q = min(1.0, max(0.0, error_probability(e, povm)))
    return OracleResult(q, povm, total_iters, cert, used, r)


def square_root_measurement(e: WeightedEnsemble) -> Povm:
    """``Pi_i = S^{-1/2} eta_i rho_i S^{-1/2}`` with ``S = sum_j eta_j rho_j``.

    The kernel of ``S`` is added to ``Pi_0`` so the elements resolve the
    identity.
    """
    s = hermitize(sum(e.weighted(i) for i in range(e.m)))
    inv, kernel = pinv_sqrt(s)
    elements = [hermitize(inv @ e.weighted(i) @ inv) for i in range(e.m)]
    elements[0] = elements[0] + kernel
    return Povm(tuple(elements))


@dataclass(frozen=True)
class Cor1Hit:
    ensemble_id: str
    seed: int
    report: ConditionReport
    ensemble: WeightedEnsemble
    path: str | None = None

    def to_dict(self) -> dict:
        return {
            "ensemble_id": self.ensemble_id,
            "seed": self.seed,
            "path": self.path,
            "conditions": self.report.to_dict(),
        }


def search_cor1(
    spec: GeneratorSpec,
    trials: int,
    *,
    ortho_tol: float = ORTHO_TOL,
    out_dir=None,
) -> list[Cor1Hit]:
    """Draw ``trials`` ensembles from ``spec`` and keep those meeting all four
    exact-attainment conditions.

    Trial ``t`` uses seed ``derive_seed(spec.seed, "search-cor1", t)``.  With
    ``out_dir`` each hit is written there as ``trial-<t>.ens.json``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    hits = []
    for t in range(trials):
        seed = derive_seed(spec.seed, "search-cor1", t)
        e = generate(spec.with_seed(seed))
        report = check_corollary1_conditions(e, ortho_tol)
        if not report.passed:
            continue
        ident = f"trial-{t}"
        path = None
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            path = str(Path(out_dir) / f"{ident}.ens.json")
            save(e, path)
        hits.append(Cor1Hit(ident, seed, report, e, path))
    log.info("search-cor1: %d/%d trials passed", len(hits), trials)
    return hits
