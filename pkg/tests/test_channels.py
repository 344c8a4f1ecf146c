import json

import numpy as np
import pytest

from helpers import KET0, KET1, proj, random_psd
from qdiscrim.bounds import pairwise_lower_bound
from qdiscrim.channels import (
    QuantumChannel,
    apply,
    channel_bound,
    ensure_channel,
    from_document,
    haar_pure_states,
    objective,
    to_document,
    unitary_channel,
)
from qdiscrim.ensembles import WeightedEnsemble
from qdiscrim.errors import DimensionMismatch, EmptyChannelList, ValidationError
from qdiscrim.linalg import haar_unitary

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
IDENTITY = unitary_channel(np.eye(2))
FLIP = unitary_channel(X)


def random_channel(rng, d_in, d_out, k) -> QuantumChannel:
    v = haar_unitary(d_out * k, rng)[:, :d_in]
    return QuantumChannel(tuple(v[a * d_out : (a + 1) * d_out] for a in range(k)))


def test_apply_examples():
    rho = random_psd(np.random.default_rng(0), 2, trace=1.0)
    assert np.allclose(apply(IDENTITY, rho), rho)
    assert np.allclose(apply(FLIP, proj(KET0)), proj(KET1))
    depol = QuantumChannel((np.eye(2) / 2, X / 2, Y / 2, Z / 2))
    assert np.max(np.abs(apply(depol, rho) - np.eye(2) / 2)) <= 1e-9


def test_apply_preserves_states():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d_in, d_out, k = (int(x) for x in rng.integers(1, 5, size=3))
        k = max(k, -(-d_in // d_out))
        c =ensure_channel(random_channel(rng, d_in, d_out, k))
        rho = random_psd(rng, d_in, int(rng.integers(1, d_in + 1)), trace=1.0)
        out = apply(c, rho)
        assert abs(np.trace(out).real - 1) <= 1e-9
        assert np.linalg.eigvalsh(out).min() >= -1e-9


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        apply(IDENTITY, np.eye(3) / 3)


def test_objective_matches_state_bound():
    rng = np.random.default_rng(2)
    chans = [random_channel(rng, 3, 2, 2) for _ in range(3)]
    eta = np.array([0.2, 0.3, 0.5])
    psis = haar_pure_states(20, 3, rng)
    vals = objective(chans, eta, psis)
    for psi, v in zip(psis, vals):
        outputs = tuple(apply(c, proj(psi)) for c in chans)
        assert abs(v - pairwise_lower_bound(WeightedEnsemble(eta, outputs))) <= 1e-12


def test_identity_vs_flip():
    res = channel_bound([IDENTITY, FLIP], samples=5000, seed=1)
    assert res.bound <= 1e-6
    # outputs are orthogonal exactly when <psi|X|psi> vanishes
    psi = res.argmin_vector
    assert abs(psi.conj() @ X @ psi) <= 1e-3


@pytest.mark.parametrize("eta", [0.3, 0.5, 0.9])
def test_identical_channels(eta):
    res = channel_bound([IDENTITY, IDENTITY], [eta, 1 - eta], samples=500, seed=0)
    assert abs(res.bound - min(eta, 1 - eta)) <= 1e-9


def test_deterministic():
    rng = np.random.default_rng(3)
    chans = [random_channel(rng, 2, 2, 2) for _ in range(3)]
    a = channel_bound(chans, samples=2000, seed=5)
    b = channel_bound(chans, samples=2000, seed=5)
    assert a.bound == b.bound and np.array_equal(a.argmin_vector, b.argmin_vector)


def test_bound_below_every_sample():
    rng = np.random.default_rng(4)
    chans = [random_channel(rng, 3, 3, 2) for _ in range(2)]
    psis = haar_pure_states(300, 3, rng)
    res = channel_bound(chans, [0.4, 0.6], inputs=psis)
    assert np.all(objective(chans, [0.4, 0.6], psis) >= res.bound)
    assert res.bound <= res.best_sample


def test_unitary_invariance():
    rng = np.random.default_rng(5)
    chans = [random_channel(rng, 3, 3, 2) for _ in range(2)]
    u = haar_unitary(3, rng)
    rotated = [QuantumChannel(tuple(u @ k @ u.conj().T for k in c.kraus)) for c in chans]
    psis = haar_pure_states(2000, 3, np.random.default_rng(6))
    a = channel_bound(chans, inputs=psis, refine=False)
    b = channel_bound(rotated, inputs=psis @ u.T, refine=False)
    assert abs(a.bound - b.bound) <= 1e-6


def test_refinement_improves():
    rng = np.random.default_rng(7)
    chans = [random_channel(rng, 2, 2, 2) for _ in range(3)]
    res = channel_bound(chans, samples=200, seed=2)
    assert res.bound <= res.best_sample


def test_rectangular_channels():
    rng = np.random.default_rng(8)
    chans = [random_channel(rng, 2, 3, 1), random_channel(rng, 2, 3, 1)]
    res = channel_bound(chans, samples=500, seed=0)
    assert 0 <= res.bound <= 0.5
    assert res.argmin_state.shape == (2, 2)


def test_errors():
    with pytest.raises(EmptyChannelList):
        channel_bound([])
    with pytest.raises(EmptyChannelList):
        channel_bound([IDENTITY])
    with pytest.raises(DimensionMismatch):
        channel_bound([IDENTITY, unitary_channel(np.eye(3))])
    with pytest.raises(ValidationError):
        ensure_channel(QuantumChannel((np.eye(2) * 0.5,)))


def test_document_round_trip(schema_validator):
    c = random_channel(np.random.default_rng(9), 2, 3, 2)
    doc = to_document(c)
    schema_validator(doc, "channel")
    back = from_document(json.loads(json.dumps(doc)))
    assert all(np.array_equal(x, y) for x, y in zip(back.kraus, c.kraus))


def test_result_schema(schema_validator):
    res = channel_bound([IDENTITY, FLIP], samples=100)
    schema_validator(json.loads(json.dumps(res.to_dict())), "channel_result")
