"""Closed-form bounds on minimum-error and unambiguous discrimination.

With ``T_ij = Tr|eta_j rho_j - eta_i rho_i|`` the pairwise lower bound is

    Q_A >= 1/2 * (1 - 1/(m-1) * sum_{i<j} T_ij)

which for ``m = 2`` is the Helstrom value.  Everything here is a direct
formula over pairwise trace norms and fidelities; nothing optimises.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .ensembles import WeightedEnsemble
from .errors import NumericalHealthWarning, WrongStateCount
from .linalg import fidelity, jordan_decompose
from .measurement import (
    ORTHO_TOL,
    ConditionReport,
    Povm,
    check_corollary1_conditions,
    error_probability,
)

NEGATIVE_CLAMP_TOL = 1e-9
GAP_IDENTITY_TOL = 1e-9
PRIOR_IDENTITY_TOL = 1e-12

CSV_COLUMNS = [
    "id",
    "m",
    "dim",
    "q_lower",
    "helstrom",
    "q_upper_t3",
    "cond_pass",
    "qu_feng",
    "qu_pairwise",
    "ineq122_lhs",
    "oracle_q",
    "attainment_gap",
]


def pairwise_trace_norms(e: WeightedEnsemble) -> dict:
    """``{(i, j): Tr|eta_j rho_j - eta_i rho_i|}`` for ``i < j``."""
    return {
        (i, j): jordan_decompose(e.weighted(j) - e.weighted(i)).trace_norm
        for i, j in combinations(range(e.m), 2)
    }


def _bound_from_norms(norms: dict, m: int) -> float:
    raw = 0.5 * (1.0 - sum(norms.values()) / (m - 1))
    if raw < 0:
        if raw < -NEGATIVE_CLAMP_TOL:
            warnings.warn(f"pairwise lower bound {raw:.3g} is negative", NumericalHealthWarning, stacklevel=3)
        return 0.0
    return raw


def pairwise_lower_bound(e: WeightedEnsemble, norms: dict | None = None) -> float:
    if e.m < 2:
        raise WrongStateCount("need at least two states")
    return _bound_from_norms(pairwise_trace_norms(e) if norms is None else norms, e.m)


def helstrom_value(e: WeightedEnsemble) -> float:
    """Exact minimum error for two states: (1 - Tr|eta_1 rho_1 - eta_0 rho_0|) / 2."""
    if e.m != 2:
        raise WrongStateCount(f"Helstrom value needs 2 states, got {e.m}")
    return pairwise_lower_bound(e)


@dataclass(frozen=True, eq=False)
class UpperBound:
    value: float
    conditions: ConditionReport
    first_index: int = 0

    @property
    def certified(self) -> bool:
        return self.conditions.theorem3

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "certified": self.certified,
            "first_index": self.first_index,
            "conditions": self.conditions.to_dict(),
        }


def upper_bound_theorem3(
    e: WeightedEnsemble, ortho_tol: float = ORTHO_TOL, norms: dict | None = None
) -> UpperBound:
    """Lower bound plus ``1/(2(m-1)) * sum_{1<=i<j<=m-1} (eta_i + eta_0 - T_0i)``.

    State 0 plays the distinguished role.  The value is an upper bound on the
    minimum error only when conditions (i), (ii) and the ``S_0`` orthogonality
    hold (:attr:`UpperBound.certified`); it is returned regardless.
    """
    norms = pairwise_trace_norms(e) if norms is None else norms
    m = e.m
    correction = sum(
        (m - 1 - i) * (e.priors[i] + e.priors[0] - norms[(0, i)]) for i in range(1, m - 1)
    ) / (2 * (m - 1))
    value = pairwise_lower_bound(e, norms) + correction
    return UpperBound(float(value), check_corollary1_conditions(e, ortho_tol))


def best_upper_bound_theorem3(e: WeightedEnsemble, ortho_tol: float = ORTHO_TOL) -> UpperBound:
    """Try every state as the distinguished one; keep the smallest certified value.

    If no labelling certifies, the bound for the original order is returned.
    """
    best = None
    for k in range(e.m):
        order = [k] + [i for i in range(e.m) if i != k]
        ub = upper_bound_theorem3(e.reordered(order), ortho_tol)
        ub = UpperBound(ub.value, ub.conditions, k)
        if ub.certified and (best is None or ub.value < best.value):
            best = ub
    return best if best is not None else upper_bound_theorem3(e, ortho_tol)


def pairwise_fidelities(e: WeightedEnsemble, check_symmetry: bool = False) -> dict:
    return {
        (i, j): fidelity(e.states[i], e.states[j], check_symmetry=check_symmetry)
        for i, j in combinations(range(e.m), 2)
    }


@dataclass(frozen=True)
class UnambiguousBounds:
    feng: float
    pairwise: float


def unambiguous_lower_bounds(e: WeightedEnsemble, fids: dict | None = None) -> UnambiguousBounds:
    """Two lower bounds on the optimal unambiguous failure probability.

    ``feng = sqrt(m/(m-1) * sum_{i != j} eta_i eta_j F_ij^2)`` and the weaker
    ``pairwise = 2/(m-1) * sum_{i<j} sqrt(eta_i eta_j) F_ij``.
    """
    fids = pairwise_fidelities(e) if fids is None else fids
    m, eta = e.m, e.priors
    sq = 2.0 * sum(eta[i] * eta[j] * f * f for (i, j), f in fids.items())
    feng = math.sqrt(m / (m - 1) * sq)
    pairwise = 2.0 / (m - 1) * sum(math.sqrt(eta[i] * eta[j]) * f for (i, j), f in fids.items())
    return UnambiguousBounds(feng, pairwise)


@dataclass(frozen=True)
class Theorem4Check:
    """``lhs122 >= 1`` is equivalent to ``qu_pairwise >= two_qa``."""

    lhs122: float
    holds: bool
    two_qa: float
    qu_pairwise: float


def theorem4_check(e: WeightedEnsemble, norms: dict | None = None, fids: dict | None = None) -> Theorem4Check:
    norms = pairwise_trace_norms(e) if norms is None else norms
    ub = unambiguous_lower_bounds(e, fids)
    lhs = sum(norms.values()) / (e.m - 1) + ub.pairwise
    return Theorem4Check(lhs, bool(lhs >= 1 - 1e-8), 2 * pairwise_lower_bound(e, norms), ub.pairwise)


def attainment_lhs(e: WeightedEnsemble, p: Povm) -> float:
    """``1/(m-1) * sum_{i<j} [eta_i + Tr(Lambda_ij Pi_j)]`` for a POVM."""
    total = 0.0
    for i, j in combinations(range(e.m), 2):
        lam = e.weighted(j) - e.weighted(i)
        total += e.priors[i] + float(np.einsum("ab,ba->", lam, p.elements[j]).real)
    return total / (e.m - 1)


def attainment_gap(e: WeightedEnsemble, p: Povm, norms: dict | None = None) -> float:
    """Distance of :func:`attainment_lhs` from ``(1 + sum T_ij/(m-1)) / 2``.

    Zero means the POVM saturates every pairwise estimate at once.
    """
    norms = pairwise_trace_norms(e) if norms is None else norms
    rhs = 0.5 * (1 + sum(norms.values()) / (e.m - 1))
    return abs(attainment_lhs(e, p) - rhs)


def identity_residuals(e: WeightedEnsemble) -> dict:
    """Residuals of the two bookkeeping identities behind the lower bound.

    ``gap_identity``: ``(1 + sum T/(m-1))/2`` against ``sum_{i<j} (eta_i + sum_k a_k^{ij})/(m-1)``
    where ``a_k^{ij}`` are the positive eigenvalues of ``Lambda_ij``.
    ``prior_identity``: ``sum_{i<j} (eta_i + eta_j)/(m-1)`` against 1.
    """
    m, eta = e.m, e.priors
    lhs = rhs = pri = 0.0
    for i, j in combinations(range(m), 2):
        jd = jordan_decompose(e.weighted(j) - e.weighted(i))
        lhs += jd.trace_norm
        rhs += eta[i] + float(np.sum(jd.pos_eigenvalues))
        pri += eta[i] + eta[j]
    return {
        "gap_identity": abs(0.5 * (1 + lhs / (m - 1)) - rhs / (m - 1)),
        "prior_identity": abs(pri / (m - 1) - 1.0),
    }


@dataclass(eq=False)
class BoundsReport:
    m: int
    dim: int
    pairwise_trace_norms: dict
    q_lower: float
    helstrom: float | None
    q_upper_t3: float | None
    conditions: ConditionReport
    upper_first_index: int
    qu_lower_feng: float
    qu_lower_pairwise: float
    ineq122_lhs: float
    ineq122_holds: bool
    attainment_gap: float | None
    identity_residuals: dict
    warnings: list = field(default_factory=list)
    oracle_q: float | None = None

    @property
    def cond_pass(self) -> bool:
        return self.conditions.corollary1

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "dim": self.dim,
            "pairwise_trace_norms": {f"{i},{j}": v for (i, j), v in self.pairwise_trace_norms.items()},
            "q_lower": self.q_lower,
            "helstrom": self.helstrom,
            "q_upper_t3": {
                "value": self.q_upper_t3,
                "certified": self.conditions.theorem3,
                "first_index": self.upper_first_index,
            },
            "conditions": self.conditions.to_dict(),
            "qu_lower_feng": self.qu_lower_feng,
            "qu_lower_pairwise": self.qu_lower_pairwise,
            "ineq122_lhs": self.ineq122_lhs,
            "ineq122_holds": self.ineq122_holds,
            "attainment_gap": self.attainment_gap,
            "identity_residuals": self.identity_residuals,
            "oracle_q": self.oracle_q,
            "warnings": list(self.warnings),
        }

    def csv_row(self, ident: str) -> dict:
        def fmt(x):
            return "" if x is None else repr(float(x))

        return {
            "id": ident,
            "m": self.m,
            "dim": self.dim,
            "q_lower": fmt(self.q_lower),
            "helstrom": fmt(self.helstrom),
            "q_upper_t3": fmt(self.q_upper_t3),
            "cond_pass": str(self.cond_pass).lower(),
            "qu_feng": fmt(self.qu_lower_feng),
            "qu_pairwise": fmt(self.qu_lower_pairwise),
            "ineq122_lhs": fmt(self.ineq122_lhs),
            "oracle_q": fmt(self.oracle_q),
            "attainment_gap": fmt(self.attainment_gap),
        }


def full_report(
    e: WeightedEnsemble,
    povm: Povm | None = None,
    ortho_tol: float = ORTHO_TOL,
    best_first: bool = False,
) -> BoundsReport:
    """Every bound and identity check for one ensemble.

    Numerical-health warnings raised while computing are captured into
    ``report.warnings`` instead of propagating.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NumericalHealthWarning)
        norms = pairwise_trace_norms(e)
        fids = pairwise_fidelities(e, check_symmetry=True)
        q_lower = pairwise_lower_bound(e, norms)
        ub = best_upper_bound_theorem3(e, ortho_tol) if best_first else upper_bound_theorem3(e, ortho_tol, norms)
        unamb = unambiguous_lower_bounds(e, fids)
        t4 = theorem4_check(e, norms, fids)
        residuals = identity_residuals(e)
    notes = [str(w.message) for w in caught if issubclass(w.category, NumericalHealthWarning)]
    for w in caught:
        if not issubclass(w.category, NumericalHealthWarning):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    for i, j in norms:
        if norms[(i, j)] > e.priors[i] + e.priors[j] + 1e-9:
            notes.append(f"Tr|Lambda_{i}{j}| exceeds eta_{i} + eta_{j}")
    if residuals["gap_identity"] > GAP_IDENTITY_TOL:
        notes.append(f"gap identity residual {residuals['gap_identity']:.3g}")
    if residuals["prior_identity"] > PRIOR_IDENTITY_TOL:
        notes.append(f"prior identity residual {residuals['prior_identity']:.3g}")
    if not t4.holds:
        notes.append(f"unambiguous inequality lhs {t4.lhs122:.12g} < 1")
    gap = None
    if povm is not None:
        gap = attainment_gap(e, povm, norms)
        # also make sure the supplied POVM is compatible
        error_probability(e, povm)
    return BoundsReport(
        m=e.m,
        dim=e.dim,
        pairwise_trace_norms=norms,
        q_lower=q_lower,
        helstrom=q_lower if e.m == 2 else None,
        q_upper_t3=ub.value,
        conditions=ub.conditions,
        upper_first_index=ub.first_index,
        qu_lower_feng=unamb.feng,
        qu_lower_pairwise=unamb.pairwise,
        ineq122_lhs=t4.lhs122,
        ineq122_holds=t4.holds,
        attainment_gap=gap,
        identity_residuals=residuals,
        warnings=notes,
    )


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
