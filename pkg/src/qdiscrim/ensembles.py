"""Weighted state ensembles: construction, validation, random generation, I/O.

Random draws use numpy's ``PCG64`` bit generator (``np.random.default_rng``).
Streams are reproducible within this implementation; other implementations
are only expected to agree statistically.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import formats
from .errors import BlockTooSmall, DimensionMismatch, DimensionWarning, InvalidRank, ParseError, ValidationError
from .linalg import (
    HERMITICITY_TOL,
    PSD_TOL,
    as_matrix,
    default_threshold,
    eigvalsh,
    hermiticity_residual,
    hermitian_eig,
    hermitize,
)

PRIOR_SUM_TOL = 1e-10
TRACE_TOL = 1e-9
RENORMALIZE_TOL = 1e-6

KINDS = ("ginibre_full_rank", "ginibre_rank_r", "pure", "block_orthogonal")


@dataclass(frozen=True, eq=False)
class WeightedEnsemble:
    """States ``rho_i`` with prior probabilities ``eta_i``.

    Construction checks only shapes; use :func:`validate` or
    :func:`ensure_valid` for the probabilistic invariants.  Indices are
    0-based throughout, so ``states[0]`` is the distinguished first state of
    the upper bound.
    """

    priors: np.ndarray
    states: tuple

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=float).reshape(-1)
        states = tuple(as_matrix(s, f"states[{k}]") for k, s in enumerate(self.states))
        if len(states) != priors.size:
            raise DimensionMismatch(f"{priors.size} priors but {len(states)} states")
        if not states:
            raise DimensionMismatch("ensemble has no states")
        dims = {s.shape[0] for s in states}
        if len(dims) != 1:
            raise DimensionMismatch(f"states have differing dimensions {sorted(dims)}")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.states)

    def weighted(self, i: int) -> np.ndarray:
        return self.priors[i] * self.states[i]

    def reordered(self, order: Sequence[int]) -> "WeightedEnsemble":
        order = list(order)
        return WeightedEnsemble(self.priors[order], tuple(self.states[k] for k in order))


def make_ensemble(states, priors="uniform") -> WeightedEnsemble:
    """Build an ensemble, resolving ``priors`` like the generator does."""
    states = tuple(states)
    return WeightedEnsemble(resolve_priors(priors, len(states)), states)


def resolve_priors(priors, m: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Turn ``"uniform"``, ``"random"`` or an explicit list into a prior vector.

    Explicit lists summing to within 1e-6 of one are renormalised; anything
    further off is rejected rather than silently fixed.
    """
    if isinstance(priors, str):
        if priors == "uniform":
            return np.full(m, 1.0 / m)
        if priors == "random":
            if rng is None:
                raise ValueError("random priors need a generator")
            return rng.dirichlet(np.ones(m))
        raise ValueError(f"unknown prior mode {priors!r}")
    p = np.asarray(priors, dtype=float).reshape(-1)
    if p.size != m:
        raise DimensionMismatch(f"{p.size} priors for {m} states")
    if np.any(p < 0):
        raise ValidationError([f"prior {k} negative ({p[k]:g})" for k in np.flatnonzero(p < 0)])
    total = p.sum()
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise ValidationError([f"priors sum {total:g} ≠ 1"])
    if abs(total - 1.0) > PRIOR_SUM_TOL:
        p = p / total
    return p


def validate(e: WeightedEnsemble, psd_tol: float = PSD_TOL) -> list[str]:
    """Every violated invariant, one line each with its residual.

    Also issues a :class:`DimensionWarning` when there are more states than
    dimensions; that case is allowed.
    """
    out = []
    total = float(np.sum(e.priors))
    if abs(total - 1.0) > PRIOR_SUM_TOL:
        out.append(f"priors sum {total:.12g} ≠ 1")
    for k, eta in enumerate(e.priors):
        if not np.isfinite(eta) or eta < 0:
            out.append(f"prior {k} negative ({eta:g})")
    for k, rho in enumerate(e.states):
        if not np.all(np.isfinite(rho)):
            out.append(f"state {k} has non-finite entries")
            continue
        herm = hermiticity_residual(rho)
        if herm > HERMITICITY_TOL:
            out.append(f"state {k} not Hermitian, max |rho - rho^dagger| {herm:.3g}")
            continue
        w = eigvalsh(rho)
        if w[-1] < -psd_tol * max(np.max(np.abs(w)), 1e-300):
            out.append(f"state {k} not PSD, min eig {w[-1]:.6g}")
        tr = float(np.trace(rho).real)
        if abs(tr - 1.0) > TRACE_TOL:
            out.append(f"state {k} trace {tr:.12g} ≠ 1")
    if e.m > e.dim:
        warnings.warn(f"{e.m} states in dimension {e.dim}", DimensionWarning, stacklevel=2)
    return out


def ensure_valid(e: WeightedEnsemble, psd_tol: float = PSD_TOL) -> WeightedEnsemble:
    problems = validate(e, psd_tol)
    if problems:
        raise ValidationError(problems)
    return e


def project_joint_support(e: WeightedEnsemble, eig_threshold: float | None = None) -> WeightedEnsemble:
    """Restrict every state to the span of all supports.

    Bound values do not change; the projection only removes dimensions no
    state can reach.  Returns ``e`` itself when the supports already span
    the whole space.
    """
    es = hermitian_eig(hermitize(sum(e.states)))
    w = es.eigenvalues
    thr = default_threshold(w) if eig_threshold is None else eig_threshold
    v = es.eigenvectors[:, w > thr]
    if v.shape[1] == e.dim:
        return e
    return WeightedEnsemble(e.priors.copy(), tuple(hermitize(v.conj().T @ rho @ v) for rho in e.states))


def ginibre_density(rng: np.random.Generator, dim: int, rank: int) -> np.ndarray:
    """G G^dagger / Tr(G G^dagger) for a dim x rank complex Gaussian G."""
    if not 1 <= rank <= dim:
        raise InvalidRank(f"rank {rank} outside 1..{dim}")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_density(dim: int, rank: int, seed: int) -> np.ndarray:
    """Seeded random density matrix of the given rank (induced Ginibre measure)."""
    return ginibre_density(np.random.default_rng(seed), dim, rank)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    dim: int
    m: int
    rank: int | None = None
    priors: object = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.rank is not None and not 1 <= self.rank <= self.dim:
            raise InvalidRank(f"rank {self.rank} outside 1..{self.dim}")
        if self.kind == "ginibre_rank_r" and self.rank is None:
            raise InvalidRank("ginibre_rank_r needs an explicit rank")

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return GeneratorSpec(self.kind, self.dim, self.m, self.rank, self.priors, seed)


def block_sizes(dim: int, m: int) -> list[int]:
    if dim < m:
        raise BlockTooSmall(f"dim {dim} < m {m}: every state needs its own block")
    base = dim // m
    return [base] * (m - 1) + [dim - base * (m - 1)]


def generate(spec: GeneratorSpec) -> WeightedEnsemble:
    """Draw an ensemble; a pure function of ``spec``.

    ``block_orthogonal`` puts state ``i`` on its own coordinate block (blocks
    of ``dim // m`` with the remainder on the last block), so every
    orthogonality condition of the exact-attainment results holds.
    """
    rng = np.random.default_rng(spec.seed)
    d, m = spec.dim, spec.m
    if spec.kind == "block_orthogonal":
        states = []
        start = 0
        for size in block_sizes(d, m):
            rank = size if spec.rank is None else min(spec.rank, size)
            rho = np.zeros((d, d), dtype=np.complex128)
            rho[start : start + size, start : start + size] = ginibre_density(rng, size, rank)
            states.append(rho)
            start += size
    else:
        rank = {"ginibre_full_rank": d, "pure": 1}.get(spec.kind, spec.rank)
        states = [ginibre_density(rng, d, rank) for _ in range(m)]
    priors = resolve_priors(spec.priors, m, rng)
    return WeightedEnsemble(priors, tuple(states))


def derive_seed(seed: int, task: str, index: int = 0) -> int:
    """Stable 64-bit seed for sub-task ``index`` of ``task``."""
    digest = hashlib.blake2b(f"{seed}:{task}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def to_document(e: WeightedEnsemble) -> dict:
    return {
        "dim": e.dim,
        "priors": [float(x) for x in e.priors],
        "states": [formats.encode_matrix(s) for s in e.states],
    }


def serialize(e: WeightedEnsemble) -> str:
    return formats.dumps(to_document(e))


def from_document(doc: dict, location: str = "", psd_tol: float = PSD_TOL) -> WeightedEnsemble:
    dim = formats.require(doc, "dim", int, location)
    if dim < 1:
        raise ParseError(f"dim {dim} must be positive", location)
    priors = formats.number_list(formats.require(doc, "priors", list, location), f"{location}priors")
    raw_states = formats.require(doc, "states", list, location)
    if len(raw_states) != len(priors):
        raise ParseError(f"{len(priors)} priors but {len(raw_states)} states", location)
    if not raw_states:
        raise ParseError("no states", location)
    states = tuple(
        formats.decode_matrix(s, f"{location}states[{k}]", (dim, dim)) for k, s in enumerate(raw_states)
    )
    p = np.asarray(priors)
    total = p.sum()
    if np.all(p >= 0) and PRIOR_SUM_TOL < abs(total - 1.0) <= RENORMALIZE_TOL:
        p = p / total
    return ensure_valid(WeightedEnsemble(p, states), psd_tol)


def deserialize(text: str, location: str = "", psd_tol: float = PSD_TOL) -> WeightedEnsemble:
    """Parse an ensemble document.

    Raises:
        ParseError: malformed JSON or shapes, with a location.
        ValidationError: well-formed but violating the ensemble invariants.
    """
    return from_document(formats.loads(text, location), location, psd_tol)


def load(path, psd_tol: float = PSD_TOL) -> WeightedEnsemble:
    return deserialize(formats.read_text(path), f"{path}: ", psd_tol)


def save(e: WeightedEnsemble, path) -> None:
    formats.write_json(path, to_document(e))
