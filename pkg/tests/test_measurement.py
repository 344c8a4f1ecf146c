import numpy as np
import pytest

from helpers import KET0, KET1, KETPLUS, block_ensemble, only_cond_eta_fails, proj, random_ensemble, random_povm
from qdiscrim.bounds import attainment_gap, pairwise_lower_bound, upper_bound_theorem3
from qdiscrim.ensembles import GeneratorSpec, generate, make_ensemble
from qdiscrim.errors import ConditionsFail, CountMismatch, DimensionMismatch, ValidationError
from qdiscrim.measurement import (
    Povm,
    check_corollary1_conditions,
    check_theorem2_conditions,
    compute_subspaces,
    error_probability,
    from_document,
    gram_schmidt,
    helstrom_povm,
    hykl_certificate,
    povm_violations,
    success_probability,
    theorem2_povm,
    to_document,
)
from qdiscrim.oracle import optimize_min_error, square_root_measurement


def assert_povm(p: Povm):
    assert np.linalg.norm(sum(p.elements) - np.eye(p.dim)) <= 1e-8
    for x in p.elements:
        assert np.linalg.eigvalsh((x + x.conj().T) / 2).min() >= -1e-8


# ---- error probability and Helstrom


def test_error_orthogonal():
    e = make_ensemble([proj(KET0), proj(KET1)])
    assert abs(error_probability(e, Povm((proj(KET0), proj(KET1))))) <= 1e-15


def test_error_maximally_mixed():
    d, m = 3, 4
    e = make_ensemble([np.eye(d) / d] * m)
    p = Povm(tuple(random_povm(np.random.default_rng(0), d, m)))
    assert abs(error_probability(e, p) - (1 - 1 / m)) <= 1e-12


def test_error_plus_success():
    e = random_ensemble(3)
    p = Povm(tuple(random_povm(np.random.default_rng(1), e.dim, e.m)))
    assert abs(error_probability(e, p) + success_probability(e, p) - 1) <= 1e-12


def test_error_mismatch():
    e = make_ensemble([proj(KET0), proj(KET1)])
    with pytest.raises(CountMismatch):
        error_probability(e, Povm((np.eye(2) / 3,) * 3))
    with pytest.raises(DimensionMismatch):
        error_probability(e, Povm((np.eye(3) / 2,) * 2))


def test_helstrom_examples():
    e = make_ensemble([proj(KET0), proj(KET1)])
    h = helstrom_povm(e)
    assert np.allclose(h.elements[1], proj(KET1)) and abs(error_probability(e, h)) <= 1e-15
    e = make_ensemble([proj(KET0), proj(KETPLUS)])
    assert abs(error_probability(e, helstrom_povm(e)) - 0.5 * (1 - 1 / np.sqrt(2))) <= 1e-12


def test_helstrom_identical_states():
    rho = np.diag([0.7, 0.3])
    e = make_ensemble([rho, rho], [0.3, 0.7])
    h = helstrom_povm(e)
    assert np.allclose(h.elements[1], np.eye(2))
    assert abs(error_probability(e, h) - 0.3) <= 1e-12


def test_helstrom_certified_random():
    for s in range(20):
        e = random_ensemble(s, m_choices=(2,))
        h = helstrom_povm(e)
        assert_povm(h)
        assert hykl_certificate(e, h).optimal


# ---- subspaces and conditions


def test_subspaces_m2():
    e = random_ensemble(4, m_choices=(2,))
    sub = compute_subspaces(e)
    assert set(sub.pairs) == {(0, 1)}
    assert set(sub.projectors) == {1}
    assert np.allclose(sub.projectors[1], sub.pos_projector(0, 1))


def test_subspace_dims_seed13():
    e = generate(GeneratorSpec("ginibre_full_rank", 3, 3, priors="random", seed=13))
    sub = compute_subspaces(e)
    for k in range(1, 3):
        stacked = np.concatenate([sub.pairs[(i, k)].pos_vectors for i in range(k)], axis=1)
        assert sub.bases[k].shape[1] == np.linalg.matrix_rank(stacked, tol=1e-10)
        b = sub.bases[k]
        assert np.allclose(b.conj().T @ b, np.eye(b.shape[1]), atol=1e-12)


def test_gram_schmidt_drops_dependent():
    v = np.array([[1, 2, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
    b = gram_schmidt(v)
    assert b.shape == (3, 2)
    assert gram_schmidt(np.zeros((3, 2))).shape == (3, 0)


@pytest.mark.parametrize("seed", [1, 2])
def test_generic_triples_fail_cond_ii(seed):
    e = generate(GeneratorSpec("ginibre_full_rank", 3, 3, seed=seed))
    r = check_theorem2_conditions(e)
    assert not r.cond_ii.passed and r.cond_ii.residual > 1e-3


def test_m2_theorem2_conditions_hold():
    for s in range(10):
        assert check_theorem2_conditions(random_ensemble(s, m_choices=(2,))).theorem2


def test_block_passes_everything():
    e = block_ensemble(0, 3)
    r = check_corollary1_conditions(e)
    assert r.passed and r.theorem2 and r.theorem3 and r.corollary1


def test_m2_random_fails_corollary1_on_s1():
    e = generate(GeneratorSpec("ginibre_full_rank", 3, 2, seed=3))
    r = check_corollary1_conditions(e)
    assert r.cond_i.passed and r.cond_ii.passed and r.cond_eta.passed
    assert not r.cond_s1.passed and r.cond_s1.residual > 1e-3
    assert not r.passed
    assert "cond_s1=FAIL" in r.summary()


def test_only_cond_eta_fails():
    e = only_cond_eta_fails()
    r = check_corollary1_conditions(e)
    assert r.cond_i.passed and r.cond_ii.passed and r.cond_s1.passed
    assert not r.cond_eta.passed
    assert abs(r.cond_eta.residual - 2 * 0.3 * 0.4) <= 1e-12


def test_only_cond_eta_fails_values():
    e = only_cond_eta_fails()
    q = 0.3 * 0.4
    p = theorem2_povm(e)
    assert abs(error_probability(e, p) - q) <= 1e-12
    assert hykl_certificate(e, p).optimal
    assert abs(upper_bound_theorem3(e).value - q) <= 1e-12
    assert abs(pairwise_lower_bound(e) - q / 2) <= 1e-12
    assert abs(optimize_min_error(e).q_star - q) <= 1e-6


def test_condition_report_dict():
    d = check_corollary1_conditions(block_ensemble(1, 3)).to_dict()
    assert d["scope"] == "corollary1" and d["passed"]
    assert set(d) >= {"cond_i", "cond_ii", "cond_s1", "cond_eta", "tolerance"}


# ---- theorem2_povm


def test_theorem2_povm_block_m3():
    e = generate(GeneratorSpec("block_orthogonal", 3, 3))
    p = theorem2_povm(e)
    for j in (1, 2):
        assert np.allclose(p.elements[j], e.states[j])
    assert np.allclose(p.elements[0], e.states[0])
    assert abs(error_probability(e, p)) <= 1e-12


def test_theorem2_povm_m2_is_helstrom():
    for s in range(5):
        e = random_ensemble(s, m_choices=(2,))
        a, b = theorem2_povm(e), helstrom_povm(e)
        assert all(np.allclose(x, y, atol=1e-12) for x, y in zip(a.elements, b.elements))


def test_theorem2_povm_unequal_priors_attainment():
    e = generate(GeneratorSpec("block_orthogonal", 6, 3, priors=[0.5, 0.3, 0.2], seed=4))
    p = theorem2_povm(e)
    assert_povm(p)
    assert attainment_gap(e, p) <= 1e-8
    assert hykl_certificate(e, p).optimal


def test_theorem2_povm_block_battery():
    for s in range(10):
        e = block_ensemble(s, int(np.random.default_rng(s).integers(2, 5)))
        p = theorem2_povm(e)
        assert_povm(p)
        sub = check_theorem2_conditions(e).subspaces
        for j in range(1, e.m):
            assert np.linalg.eigvalsh(p.elements[j] - sub.projectors[j]).min() >= -1e-9
        assert hykl_certificate(e, p).optimal


def test_theorem2_povm_raises_when_conditions_fail():
    e = generate(GeneratorSpec("ginibre_full_rank", 3, 3, seed=1))
    with pytest.raises(ConditionsFail) as exc:
        theorem2_povm(e)
    assert not exc.value.report.theorem2


def test_only_if_direction_evidence():
    # no POVM in the battery attains the pairwise identity when (i) or (ii) fails
    rng = np.random.default_rng(500)
    checked = 0
    for s in range(200):
        e = random_ensemble(1000 + s, m_choices=(3, 4))
        if check_theorem2_conditions(e).theorem2:
            continue
        candidates = [square_root_measurement(e), optimize_min_error(e, restarts=1).povm]
        candidates += [Povm(tuple(random_povm(rng, e.dim, e.m))) for _ in range(3)]
        for p in candidates:
            assert attainment_gap(e, p) > 1e-6
        checked += 1
        if checked == 100:
            break
    assert checked == 100


# ---- certificate


def test_certificate_rejects_trivial_povm():
    e = make_ensemble([proj(KET0), proj(KET1)])
    c = hykl_certificate(e, Povm((np.eye(2), np.zeros((2, 2)))))
    assert not c.optimal and c.worst_min_eig < -0.1


def test_certificate_srm_trine_optimal():
    kets = [np.array([np.cos(2 * np.pi * k / 3), np.sin(2 * np.pi * k / 3)]) for k in range(3)]
    e = make_ensemble([proj(v) for v in kets])
    assert hykl_certificate(e, square_root_measurement(e)).optimal


# ---- POVM I/O and validation


def test_povm_round_trip(schema_validator):
    p = helstrom_povm(random_ensemble(7, m_choices=(2,)))
    doc = to_document(p)
    schema_validator(doc, "povm")
    back = from_document(doc)
    assert all(np.array_equal(x, y) for x, y in zip(back.elements, p.elements))


def test_povm_violations():
    bad = Povm((np.diag([1.0, -0.1]), np.diag([0.0, 1.1])))
    msgs = povm_violations(bad)
    assert any("element 0 not PSD" in m for m in msgs)
    short = Povm((np.eye(2) / 2, np.eye(2) / 3))
    assert any("identity" in m for m in povm_violations(short))
    with pytest.raises(ValidationError):
        from_document(to_document(short))
