import csv
import io
import math

import numpy as np
import pytest

from helpers import KET0, KET1, KETPLUS, block_ensemble, only_cond_eta_fails, proj, random_ensemble, trine
from qdiscrim.bounds import (
    CSV_COLUMNS,
    attainment_gap,
    best_upper_bound_theorem3,
    csv_text,
    full_report,
    helstrom_value,
    identity_residuals,
    pairwise_fidelities,
    pairwise_lower_bound,
    pairwise_trace_norms,
    theorem4_check,
    unambiguous_lower_bounds,
    upper_bound_theorem3,
)
from qdiscrim.ensembles import GeneratorSpec, deserialize, generate, make_ensemble, serialize
from qdiscrim.errors import NumericalHealthWarning, WrongStateCount
from qdiscrim.linalg import fidelity, support_projector, trace_distance
from qdiscrim.measurement import theorem2_povm


@pytest.mark.parametrize("eta", [0.1, 0.3, 0.5, 0.8])
def test_lower_bound_identical_states(eta):
    rho = np.diag([0.6, 0.4])
    assert abs(pairwise_lower_bound(make_ensemble([rho, rho], [eta, 1 - eta])) - min(eta, 1 - eta)) <= 1e-12


def test_lower_bound_trine():
    assert abs(pairwise_lower_bound(trine()) - 0.5 * (1 - math.sqrt(3) / 2)) <= 1e-12
    for v in pairwise_trace_norms(trine()).values():
        assert abs(v - 1 / math.sqrt(3)) <= 1e-12


def test_helstrom_values():
    assert helstrom_value(make_ensemble([proj(KET0), proj(KET1)])) == 0
    assert abs(helstrom_value(make_ensemble([proj(KET0), proj(KETPLUS)])) - 0.5 * (1 - 1 / math.sqrt(2))) <= 1e-12
    with pytest.raises(WrongStateCount):
        helstrom_value(trine())


def test_negative_bound_clamped():
    e = make_ensemble([proj(KET0), proj(KET1)])
    with pytest.warns(NumericalHealthWarning):
        assert pairwise_lower_bound(e, {(0, 1): 1.01}) == 0.0


def test_upper_bound_block_m3():
    e = generate(GeneratorSpec("block_orthogonal", 6, 3, priors=[0.5, 0.3, 0.2], seed=2))
    ub = upper_bound_theorem3(e)
    assert ub.certified
    assert abs(ub.value) <= 1e-12


def test_upper_bound_block_m4():
    e = generate(GeneratorSpec("block_orthogonal", 8, 4, seed=3))
    ub = upper_bound_theorem3(e)
    assert ub.conditions.corollary1
    assert abs(ub.value - pairwise_lower_bound(e)) <= 1e-12 and abs(ub.value) <= 1e-12


def test_best_first_relabels():
    e = only_cond_eta_fails().reordered([1, 0, 2])
    assert not upper_bound_theorem3(e).certified
    best = best_upper_bound_theorem3(e)
    assert best.certified and best.first_index == 1
    assert abs(best.value - 0.3 * 0.4) <= 1e-12


def test_unambiguous_identical_states():
    rho = np.eye(2) / 2
    ub = unambiguous_lower_bounds(make_ensemble([rho, rho]))
    assert abs(ub.pairwise - 1) <= 1e-12 and abs(ub.feng - 1) <= 1e-12


def test_unambiguous_zero_plus():
    ub = unambiguous_lower_bounds(make_ensemble([proj(KET0), proj(KETPLUS)]))
    assert abs(ub.pairwise - 1 / math.sqrt(2)) <= 1e-12


def test_theorem4_check_hand_example():
    t = theorem4_check(make_ensemble([np.eye(2) / 2, np.eye(2) / 2]))
    assert abs(t.lhs122 - 1) <= 1e-12 and t.holds


def test_theorem4_check_sweep():
    for s in range(500):
        e = random_ensemble(2000 + s, m_choices=(2, 3, 4))
        t = theorem4_check(e)
        assert t.lhs122 >= 1 - 1e-8
        assert t.qu_pairwise >= t.two_qa - 1e-8


def test_feng_dominates_pairwise():
    for s in range(100):
        ub = unambiguous_lower_bounds(random_ensemble(s))
        assert ub.feng >= ub.pairwise - 1e-9


def test_trace_norm_ceiling_iff_orthogonal():
    for s in range(60):
        e = random_ensemble(s) if s % 2 else block_ensemble(s, 3)
        for (i, j), t in pairwise_trace_norms(e).items():
            ceiling = e.priors[i] + e.priors[j]
            assert t <= ceiling + 1e-9
            overlap = np.linalg.norm(support_projector(e.states[i]) @ support_projector(e.states[j]))
            assert (abs(t - ceiling) <= 1e-9) == (overlap <= 1e-8)


def test_fact1_chain():
    for s in range(40):
        e = random_ensemble(s)
        for (i, j), f in pairwise_fidelities(e).items():
            a, b = e.weighted(i), e.weighted(j)
            scaled = fidelity(a, b)
            assert abs(math.sqrt(e.priors[i] * e.priors[j]) * f - scaled) <= 1e-9
            assert scaled >= (e.priors[i] + e.priors[j]) / 2 - trace_distance(a, b) - 1e-8


def test_identity_residuals_small():
    for s in range(30):
        r = identity_residuals(random_ensemble(s))
        assert r["gap_identity"] <= 1e-9 and r["prior_identity"] <= 1e-12


def test_full_report_block_attains():
    e = generate(GeneratorSpec("block_orthogonal", 5, 3, priors="random", seed=8))
    p = theorem2_povm(e)
    r = full_report(e, p)
    assert r.attainment_gap <= 1e-8
    assert r.cond_pass and r.warnings == []
    assert abs(attainment_gap(e, p)) <= 1e-8


def test_full_report_fields(schema_validator):
    e = random_ensemble(12, m_choices=(3,))
    d = full_report(e).to_dict()
    schema_validator(d, "report")
    assert d["helstrom"] is None
    d2 = full_report(random_ensemble(12, m_choices=(2,))).to_dict()
    assert d2["helstrom"] == d2["q_lower"]


def test_report_determinism():
    e = random_ensemble(21)
    a = full_report(deserialize(serialize(e))).to_dict()
    b = full_report(deserialize(serialize(e))).to_dict()
    assert a == b


def test_best_first_in_report():
    # moving state 1 to the front restores the certified labelling
    e = only_cond_eta_fails().reordered([1, 0, 2])
    r = full_report(e, best_first=True)
    best = best_upper_bound_theorem3(e)
    assert r.conditions.theorem3 and r.upper_first_index == best.first_index == 1
    assert r.q_upper_t3 == best.value


def test_csv_layout():
    rows = [full_report(random_ensemble(s)).csv_row(f"e{s}") for s in range(3)]
    text = csv_text(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert list(parsed[0]) == CSV_COLUMNS
    assert [r["id"] for r in parsed] == ["e0", "e1", "e2"]
    assert all(r["oracle_q"] == "" for r in parsed)
    assert float(parsed[0]["q_lower"]) == full_report(random_ensemble(0)).q_lower
