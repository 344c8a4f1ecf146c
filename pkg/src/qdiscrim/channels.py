"""Lower bound on the minimum error for discriminating quantum channels.

For channels ``E_1..E_m`` with priors ``eta`` the state bound is applied to
the outputs and minimised over inputs:

    f(rho) = 1/2 * (1 - 1/(m-1) * sum_{i<j} Tr|eta_j E_j(rho) - eta_i E_i(rho)|)
    Q_E >= min_rho f(rho)

Each ``rho -> Tr|eta_j E_j(rho) - eta_i E_i(rho)|`` is a convex function (a norm
of a linear map), so ``f`` is concave and its minimum over the convex set of
density matrices is attained at an extreme point, i.e. a pure state.  The
search therefore runs over pure inputs on the unextended input space (no
ancilla): Haar-random samples followed by a local spherical descent from the
best sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import formats
from .ensembles import resolve_priors
from .errors import DimensionMismatch, EmptyChannelList, ValidationError
from .linalg import as_hermitian, batched_eigvalsh, hermitize

TP_TOL = 1e-8
CHUNK = 4096
REFINE_START = 0.1
REFINE_STOP = 1e-4
REFINE_MAX_MOVES = 20000


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Channel in Kraus form; each ``kraus[a]`` has shape ``(dim_out, dim_in)``."""

    kraus: tuple

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus)
        if not ks:
            raise DimensionMismatch("channel needs at least one Kraus operator")
        if any(k.ndim != 2 for k in ks) or len({k.shape for k in ks}) != 1:
            raise DimensionMismatch("Kraus operators must be matrices of one common shape")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def stacked(self) -> np.ndarray:
        return np.stack(self.kraus)

    def tp_residual(self) -> float:
        total = sum(k.conj().T @ k for k in self.kraus)
        return float(np.linalg.norm(total - np.eye(self.dim_in)))


def unitary_channel(u) -> QuantumChannel:
    return QuantumChannel((np.asarray(u, dtype=np.complex128),))


def ensure_channel(c: QuantumChannel, tp_tol: float = TP_TOL) -> QuantumChannel:
    resid = c.tp_residual()
    if resid > tp_tol:
        raise ValidationError([f"channel not trace preserving, ||sum K^dagger K - I|| = {resid:.3g}"])
    return c


def apply(c: QuantumChannel, rho) -> np.ndarray:
    """``sum_a K_a rho K_a^dagger``."""
    rho = as_hermitian(rho, name="rho")
    if rho.shape[0] != c.dim_in:
        raise DimensionMismatch(f"state dim {rho.shape[0]} vs channel input dim {c.dim_in}")
    return hermitize(sum(k @ rho @ k.conj().T for k in c.kraus))


def _check_channels(channels) -> list[QuantumChannel]:
    channels = list(channels)
    if not channels:
        raise EmptyChannelList("no channels given")
    if len({(c.dim_in, c.dim_out) for c in channels}) != 1:
        raise DimensionMismatch("channels must share input and output dimensions")
    return channels


def objective(channels, priors, psis) -> np.ndarray:
    """The state-level lower bound on the channel outputs, for each row of ``psis``.

    ``psis`` has shape ``(n, dim_in)`` and holds (not necessarily normalised)
    pure input vectors; they are normalised here.
    """
    channels = _check_channels(channels)
    eta = np.asarray(priors, dtype=float)
    m = len(channels)
    psis = np.atleast_2d(np.asarray(psis, dtype=np.complex128))
    if psis.shape[1] != channels[0].dim_in:
        raise DimensionMismatch(f"inputs have dim {psis.shape[1]}, channels expect {channels[0].dim_in}")
    psis = psis / np.linalg.norm(psis, axis=1, keepdims=True)
    out = np.empty(psis.shape[0])
    for start in range(0, psis.shape[0], CHUNK):
        block = psis[start : start + CHUNK]
        outputs = []
        for c, w in zip(channels, eta):
            phi = np.einsum("aij,nj->nai", c.stacked(), block)
            outputs.append(w * np.einsum("nai,naj->nij", phi, phi.conj()))
        total = np.zeros(block.shape[0])
        for i, j in combinations(range(m), 2):
            total += np.sum(np.abs(batched_eigvalsh(outputs[j] - outputs[i])), axis=1)
        out[start : start + CHUNK] = np.maximum(0.5 * (1.0 - total / (m - 1)), 0.0)
    return out


@dataclass(frozen=True, eq=False)
class ChannelBoundResult:
    bound: float
    argmin_state: np.ndarray
    argmin_vector: np.ndarray
    samples: int
    refined: bool
    seed: int
    best_sample: float

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "argmin_state": formats.encode_matrix(self.argmin_state),
            "argmin_vector": [[float(z.real), float(z.imag)] for z in self.argmin_vector],
            "samples": self.samples,
            "refined": self.refined,
            "seed": self.seed,
            "best_sample": self.best_sample,
        }


def haar_pure_states(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _refine(channels, eta, psi, value):
    d = psi.size
    dirs = np.concatenate([np.eye(d), 1j * np.eye(d)]).astype(np.complex128)
    dirs = np.concatenate([dirs, -dirs])
    step = REFINE_START
    moves = 0
    while step >= REFINE_STOP and moves < REFINE_MAX_MOVES:
        cands = psi[None, :] + step * dirs
        cands /= np.linalg.norm(cands, axis=1, keepdims=True)
        vals = objective(channels, eta, cands)
        k = int(np.argmin(vals))
        if vals[k] < value:
            psi, value = cands[k], float(vals[k])
            moves += 1
        else:
            step /= 2
    return psi, value


def channel_bound(
    channels,
    priors="uniform",
    *,
    samples: int = 20000,
    refine: bool = True,
    seed: int = 0,
    inputs=None,
) -> ChannelBoundResult:
    """Minimise the output-state lower bound over pure inputs.

    ``inputs`` replaces the Haar sample set with explicit vectors.  Ties in
    the sampled minimum go to the lowest sample index.
    """
    channels = _check_channels(channels)
    eta = resolve_priors(priors, len(channels))
    if len(channels) < 2:
        raise EmptyChannelList("need at least two channels to discriminate")
    d = channels[0].dim_in
    if inputs is None:
        psis = haar_pure_states(samples, d, np.random.default_rng(seed))
    else:
        psis = np.atleast_2d(np.asarray(inputs, dtype=np.complex128))
        psis = psis / np.linalg.norm(psis, axis=1, keepdims=True)
    vals = objective(channels, eta, psis)
    k = int(np.argmin(vals))
    psi, value = psis[k], float(vals[k])
    best_sample = value
    if refine:
        psi, value = _refine(channels, eta, psi, value)
    # fix the global phase for a reproducible report
    nz = np.flatnonzero(np.abs(psi) > 1e-12)
    if nz.size:
        psi = psi * (np.conj(psi[nz[0]]) / abs(psi[nz[0]]))
    return ChannelBoundResult(
        bound=value,
        argmin_state=np.outer(psi, psi.conj()),
        argmin_vector=psi,
        samples=psis.shape[0],
        refined=refine,
        seed=seed,
        best_sample=best_sample,
    )


def to_document(c: QuantumChannel) -> dict:
    return {"dim_in": c.dim_in, "dim_out": c.dim_out, "kraus": [formats.encode_matrix(k) for k in c.kraus]}


def from_document(doc: dict, location: str = "", tp_tol: float = TP_TOL) -> QuantumChannel:
    dim_in = formats.require(doc, "dim_in", int, location)
    dim_out = formats.require(doc, "dim_out", int, location)
    raw = formats.require(doc, "kraus", list, location)
    if not raw:
        raise formats.ParseError("no Kraus operators", location)
    ks = tuple(formats.decode_matrix(k, f"{location}kraus[{a}]", (dim_out, dim_in)) for a, k in enumerate(raw))
    return ensure_channel(QuantumChannel(ks), tp_tol)


def load(path, tp_tol: float = TP_TOL) -> QuantumChannel:
    return from_document(formats.loads(formats.read_text(path), f"{path}: "), f"{path}: ", tp_tol)


def save(c: QuantumChannel, path) -> None:
    formats.write_json(path, to_document(c))
