"""POVMs: evaluation, explicit optimal constructions, and attainment conditions.

Indices are 0-based.  For a pair ``i < j`` the weighted difference is
``Lambda_ij = eta_j rho_j - eta_i rho_i``.  ``S_k`` (``k >= 1``) is the span
of the positive eigenspaces of ``Lambda_0k, ..., Lambda_{k-1,k}`` and ``P_k``
its projector.  ``S_0`` denotes the support of ``eta_0 rho_0``.

Eigenvalues of ``Lambda_ij`` inside ``(-threshold, threshold)`` belong to
neither the positive nor the negative eigenspace.  This is a convention: the
zero eigenspace plays no role in the bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import formats
from .ensembles import WeightedEnsemble
from .errors import ConditionsFail, CountMismatch, DimensionMismatch, NotPSD, ValidationError, WrongStateCount
from .linalg import (
    JordanDecomposition,
    PSD_TOL,
    as_matrix,
    eigvalsh,
    hermitize,
    jordan_decompose,
    support_projector,
)

ORTHO_TOL = 1e-8
CERT_TOL = 1e-7
POVM_TOL = 1e-8
GS_DROP_TOL = 1e-10
CERT_ASYMMETRY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators ``elements[i]`` resolving the identity."""

    elements: tuple

    def __post_init__(self):
        elements = tuple(as_matrix(x, f"elements[{k}]") for k, x in enumerate(self.elements))
        if not elements:
            raise DimensionMismatch("POVM has no elements")
        if len({x.shape for x in elements}) != 1:
            raise DimensionMismatch("POVM elements differ in dimension")
        object.__setattr__(self, "elements", elements)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.elements)


def povm_violations(p: Povm, psd_tol: float = POVM_TOL, identity_tol: float = POVM_TOL) -> list[str]:
    out = []
    for k, x in enumerate(p.elements):
        lo = float(eigvalsh(hermitize(x))[-1])
        if lo < -psd_tol:
            out.append(f"element {k} not PSD, min eig {lo:.3g}")
    resid = float(np.linalg.norm(sum(p.elements) - np.eye(p.dim)))
    if resid > identity_tol:
        out.append(f"elements sum to identity only within {resid:.3g}")
    return out


def ensure_povm(p: Povm, psd_tol: float = POVM_TOL) -> Povm:
    problems = povm_violations(p, psd_tol)
    if problems:
        raise ValidationError(problems)
    return p


def _check_pair(e: WeightedEnsemble, p: Povm) -> None:
    if e.dim != p.dim:
        raise DimensionMismatch(f"ensemble dim {e.dim} vs POVM dim {p.dim}")
    if e.m != p.m:
        raise CountMismatch(f"{e.m} states vs {p.m} POVM elements")


def _tr(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.einsum("ij,ji->", a, b).real)


def success_probability(e: WeightedEnsemble, p: Povm) -> float:
    _check_pair(e, p)
    return sum(eta * _tr(rho, pi) for eta, rho, pi in zip(e.priors, e.states, p.elements))


def error_probability(e: WeightedEnsemble, p: Povm) -> float:
    """1 - sum_i eta_i Tr(rho_i Pi_i); not clamped."""
    return 1.0 - success_probability(e, p)


def helstrom_povm(e: WeightedEnsemble) -> Povm:
    """Optimal two-outcome measurement: project onto the positive part of Lambda_01."""
    if e.m != 2:
        raise WrongStateCount(f"Helstrom measurement needs 2 states, got {e.m}")
    jd = jordan_decompose(e.weighted(1) - e.weighted(0))
    pi1 = jd.pos_projector
    return Povm((np.eye(e.dim) - pi1, pi1))


def gram_schmidt(vectors: np.ndarray, drop_tol: float = GS_DROP_TOL) -> np.ndarray:
    """Orthonormal basis of the column span (modified Gram-Schmidt, two passes).

    A column is dropped when its residual norm falls below ``drop_tol`` times
    its original norm.
    """
    basis = []
    for k in range(vectors.shape[1]):
        v = vectors[:, k].astype(np.complex128)
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        for _ in range(2):
            for q in basis:
                v = v - q * np.vdot(q, v)
        nv = np.linalg.norm(v)
        if nv > drop_tol * norm0:
            basis.append(v / nv)
    if not basis:
        return np.zeros((vectors.shape[0], 0), dtype=np.complex128)
    return np.column_stack(basis)


@dataclass(frozen=True, eq=False)
class SubspaceReport:
    """Eigenspace data of all ``Lambda_ij`` and the projectors ``P_k``.

    ``pairs[(i, j)]`` is the Jordan decomposition of ``Lambda_ij``;
    ``projectors[k]`` is ``P_k`` for ``k = 1..m-1`` and ``bases[k]`` an
    orthonormal basis of ``S_k``.
    """

    pairs: dict
    projectors: dict
    bases: dict

    def pos_projector(self, i: int, j: int) -> np.ndarray:
        return self.pairs[(i, j)].pos_projector

    def neg_projector(self, i: int, j: int) -> np.ndarray:
        return self.pairs[(i, j)].neg_projector

    def dims(self) -> dict:
        return {k: b.shape[1] for k, b in self.bases.items()}

    def pair_dims(self) -> dict:
        return {
            key: (jd.pos_vectors.shape[1], jd.neg_vectors.shape[1]) for key, jd in self.pairs.items()
        }


def compute_subspaces(e: WeightedEnsemble, eig_threshold: float | None = None) -> SubspaceReport:
    pairs: dict[tuple[int, int], JordanDecomposition] = {}
    for i, j in combinations(range(e.m), 2):
        pairs[(i, j)] = jordan_decompose(e.weighted(j) - e.weighted(i), eig_threshold)
    projectors, bases = {}, {}
    for k in range(1, e.m):
        stacked = np.concatenate([pairs[(i, k)].pos_vectors for i in range(k)], axis=1)
        b = gram_schmidt(stacked)
        bases[k] = b
        projectors[k] = b @ b.conj().T
    return SubspaceReport(pairs, projectors, bases)


@dataclass(frozen=True)
class Condition:
    passed: bool
    residual: float


@dataclass(frozen=True, eq=False)
class ConditionReport:
    """Orthogonality conditions for exact attainment of the pairwise bound.

    * ``cond_i``: positive eigenspace of ``Lambda_{i1,j}`` orthogonal to the
      negative eigenspace of ``Lambda_{i2,j}`` for all ``i1, i2 < j``.
    * ``cond_ii``: ``P_i P_j = 0`` for ``1 <= i < j``.
    * ``cond_s1``: support of ``eta_0 rho_0`` orthogonal to every ``S_j``.
    * ``cond_eta``: ``eta_i + eta_0 = Tr|Lambda_0i|`` for ``1 <= i <= m-2``.

    ``scope`` selects which of them :attr:`passed` requires: ``"theorem2"``
    (i and ii) or ``"corollary1"`` (all four).
    """

    cond_i: Condition
    cond_ii: Condition
    cond_s1: Condition
    cond_eta: Condition
    tol: float
    scope: str = "theorem2"
    subspaces: SubspaceReport | None = field(default=None, repr=False, compare=False)

    @property
    def theorem2(self) -> bool:
        return self.cond_i.passed and self.cond_ii.passed

    @property
    def theorem3(self) -> bool:
        return self.theorem2 and self.cond_s1.passed

    @property
    def corollary1(self) -> bool:
        return self.theorem3 and self.cond_eta.passed

    @property
    def passed(self) -> bool:
        return self.corollary1 if self.scope == "corollary1" else self.theorem2

    def summary(self) -> str:
        parts = [
            f"{name}={'ok' if c.passed else 'FAIL'}({c.residual:.3g})"
            for name, c in (
                ("cond_i", self.cond_i),
                ("cond_ii", self.cond_ii),
                ("cond_s1", self.cond_s1),
                ("cond_eta", self.cond_eta),
            )
        ]
        return ", ".join(parts)

    def to_dict(self) -> dict:
        out = {"scope": self.scope, "passed": self.passed, "tolerance": self.tol}
        for name in ("cond_i", "cond_ii", "cond_s1", "cond_eta"):
            c = getattr(self, name)
            out[name] = {"passed": c.passed, "residual": c.residual}
        out["theorem2"] = self.theorem2
        out["theorem3"] = self.theorem3
        out["corollary1"] = self.corollary1
        return out


def _fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def condition_report(
    e: WeightedEnsemble,
    ortho_tol: float = ORTHO_TOL,
    eig_threshold: float | None = None,
    scope: str = "theorem2",
    subspaces: SubspaceReport | None = None,
) -> ConditionReport:
    sub = compute_subspaces(e, eig_threshold) if subspaces is None else subspaces
    m = e.m
    r_i = 0.0
    for j in range(1, m):
        for i1 in range(j):
            for i2 in range(j):
                r_i = max(r_i, _fro(sub.pos_projector(i1, j) @ sub.neg_projector(i2, j)))
    r_ii = 0.0
    for i, j in combinations(range(1, m), 2):
        r_ii = max(r_ii, _fro(sub.projectors[i] @ sub.projectors[j]))
    s0 = support_projector(e.weighted(0), eig_threshold)
    r_s1 = max((_fro(s0 @ sub.projectors[j]) for j in range(1, m)), default=0.0)
    r_eta = max(
        (abs(e.priors[i] + e.priors[0] - sub.pairs[(0, i)].trace_norm) for i in range(1, m - 1)),
        default=0.0,
    )

    def cond(r):
        return Condition(bool(r <= ortho_tol), float(r))

    return ConditionReport(cond(r_i), cond(r_ii), cond(r_s1), cond(r_eta), ortho_tol, scope, sub)


def check_theorem2_conditions(e: WeightedEnsemble, ortho_tol: float = ORTHO_TOL, **kwargs) -> ConditionReport:
    """Conditions (i) and (ii) under which the pairwise lower bound is attainable
    term by term.  The cond_s1 and cond_eta fields are filled in too."""
    return condition_report(e, ortho_tol, scope="theorem2", **kwargs)


def check_corollary1_conditions(e: WeightedEnsemble, ortho_tol: float = ORTHO_TOL, **kwargs) -> ConditionReport:
    """All four sufficient conditions for the minimum error to equal the
    pairwise lower bound."""
    return condition_report(e, ortho_tol, scope="corollary1", **kwargs)


def theorem2_povm(e: WeightedEnsemble, ortho_tol: float = ORTHO_TOL, report: ConditionReport | None = None) -> Povm:
    """``Pi_j = P_j`` for ``j >= 1`` and ``Pi_0 = I - sum_j P_j``.

    Raises:
        ConditionsFail: conditions (i)/(ii) do not hold.
        NotPSD: ``Pi_0`` has an eigenvalue below -1e-8, which means the
            orthogonality tolerance let overlapping subspaces through.
    """
    report = check_theorem2_conditions(e, ortho_tol) if report is None else report
    if not report.theorem2:
        raise ConditionsFail(report)
    sub = report.subspaces
    rest = [sub.projectors[j] for j in range(1, e.m)]
    first = hermitize(np.eye(e.dim) - sum(rest))
    lo = float(eigvalsh(first)[-1])
    if lo < -POVM_TOL:
        raise NotPSD(f"I - sum_j P_j has eigenvalue {lo:.3g}")
    return Povm((first, *rest))


@dataclass(frozen=True)
class Certificate:
    optimal: bool
    worst_min_eig: float
    asymmetry: float = 0.0

    def to_dict(self) -> dict:
        return {"optimal": self.optimal, "worst_min_eig": self.worst_min_eig, "asymmetry": self.asymmetry}


def hykl_certificate(e: WeightedEnsemble, p: Povm, cert_tol: float = CERT_TOL) -> Certificate:
    """Optimality test: ``Z = sum_i eta_i rho_i Pi_i`` must dominate every ``eta_j rho_j``.

    ``Z`` is Hermitian at an optimum; an asymmetry above 1e-6 counts as
    failure by itself, otherwise ``Z`` is symmetrised before the eigenvalue
    test.
    """
    _check_pair(e, p)
    z = sum(e.weighted(i) @ p.elements[i] for i in range(e.m))
    asym = _fro(z - z.conj().T)
    zs = hermitize(z)
    worst = min(float(eigvalsh(zs - e.weighted(j))[-1]) for j in range(e.m))
    return Certificate(bool(worst >= -cert_tol and asym <= CERT_ASYMMETRY_TOL), worst, asym)


def to_document(p: Povm) -> dict:
    return {"dim": p.dim, "elements": [formats.encode_matrix(x) for x in p.elements]}


def from_document(doc: dict, location: str = "", psd_tol: float = PSD_TOL) -> Povm:
    dim = formats.require(doc, "dim", int, location)
    raw = formats.require(doc, "elements", list, location)
    if not raw:
        raise formats.ParseError("no elements", location)
    elements = tuple(
        formats.decode_matrix(x, f"{location}elements[{k}]", (dim, dim)) for k, x in enumerate(raw)
    )
    return ensure_povm(Povm(elements), psd_tol)


def load(path) -> Povm:
    return from_document(formats.loads(formats.read_text(path), f"{path}: "), f"{path}: ")


def save(p: Povm, path) -> None:
    formats.write_json(path, to_document(p))
