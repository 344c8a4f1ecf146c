"""Shared constructions for the test modules."""

import json
from importlib import resources

import numpy as np

from qdiscrim.ensembles import GeneratorSpec, WeightedEnsemble, generate, random_density

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KETPLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_hermitian(rng, d) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2


def random_psd(rng, d, rank=None, trace=None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    a = g @ g.conj().T
    tr = rng.uniform(0.1, 2.0) if trace is None else trace
    return a * (tr / np.trace(a).real)


def random_povm(rng, d, k) -> list[np.ndarray]:
    # first element full rank so the sum is invertible
    xs = [random_psd(rng, d)] + [random_psd(rng, d, rank=int(rng.integers(1, d + 1))) for _ in range(k - 1)]
    w, v = np.linalg.eigh(sum(xs))
    inv = (v / np.sqrt(w)) @ v.conj().T
    return [inv @ x @ inv for x in xs]


def trine() -> WeightedEnsemble:
    kets = [np.array([np.cos(2 * np.pi * k / 3), np.sin(2 * np.pi * k / 3)]) for k in range(3)]
    return WeightedEnsemble(np.full(3, 1 / 3), tuple(proj(v) for v in kets))


def zero_plus() -> WeightedEnsemble:
    return WeightedEnsemble(np.array([0.5, 0.5]), (proj(KET0), proj(KETPLUS)))


def random_ensemble(seed: int, m_choices=(2, 3, 4, 5), dims=(2, 6)) -> WeightedEnsemble:
    """Mixed-rank random ensemble; the layout of the draw is part of the test fixture."""
    rng = np.random.default_rng(seed)
    m = int(rng.choice(m_choices))
    d = int(rng.integers(dims[0], dims[1] + 1))
    states = tuple(random_density(d, int(rng.integers(1, d + 1)), int(rng.integers(2**31))) for _ in range(m))
    return WeightedEnsemble(rng.dirichlet(np.ones(m)), states)


def block_ensemble(seed: int, m: int, dim: int | None = None) -> WeightedEnsemble:
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(m, 2 * m + 2)) if dim is None else dim
    return generate(GeneratorSpec("block_orthogonal", dim, m, priors="random", seed=seed))


def load_schema(name: str) -> dict:
    return json.loads(resources.files("qdiscrim").joinpath(f"schemas/{name}.schema.json").read_text())


def only_cond_eta_fails(p=0.4, priors=(0.5, 0.3, 0.2)) -> WeightedEnsemble:
    """rho_0 = |0><0|, rho_1 = diag(p, 1-p, 0), rho_2 = |2><2| with eta_1 p < eta_0.

    Every orthogonality condition holds, but Tr|Lambda_01| = eta_0 + eta_1 - 2 eta_1 p.
    Optimal error is eta_1 p (state 1 loses its |0> weight), which equals the
    upper bound; the lower bound is half of it.
    """
    states = (np.diag([1.0, 0, 0]), np.diag([p, 1 - p, 0]), np.diag([0, 0, 1.0]))
    return WeightedEnsemble(np.array(priors), states)
