import itertools

import numpy as np
import pytest

from empathic_mftg.core import EmpathyMatrix
from empathic_mftg.errors import InvalidParameterError, StructuralError
from empathic_mftg.forwarding import (
    CrowdForwardParams,
    deviation_table,
    empathic_payoff,
    equilibrium_table,
    is_equilibrium,
    material_payoff,
    path_success_probability,
    sample_material_payoffs,
    service_kindness,
    sustaining_range,
    to_finite_game,
)
from empathic_mftg.measure_dp import SimplexGrid, best_response_gaps, mean_field_equilibrium, pure_policy


def make_params(n=3, m_star=2, alpha=0.3, gamma=0.3, p=None, lam=0.0, sensitivity=None):
    return CrowdForwardParams(
        n=n,
        m_star=m_star,
        alpha=alpha,
        gamma=gamma,
        p=np.ones(n) if p is None else np.asarray(p, dtype=float),
        lam=EmpathyMatrix.uniform(n, lam),
        sensitivity=None if sensitivity is None else EmpathyMatrix.uniform(n, sensitivity),
    )


# (F, F, nF) with a third player who gains nothing from the network
PIVOTAL = dict(alpha=0.6, gamma=0.3, p=[0.5, 0.5, 0.0])
# four players, three needed, forwarding slightly costlier than its benefit
RECIPROCAL = dict(n=4, m_star=3, alpha=0.6, gamma=0.3, p=[0.5] * 4)


def test_all_defect_gives_zero():
    assert material_payoff(make_params(), ["nF"] * 3).as_array() == pytest.approx([0.0, 0.0, 0.0])


def test_all_forward_pays_an_even_share():
    assert material_payoff(make_params(), ["F"] * 3).as_array() == pytest.approx([0.8, 0.8, 0.8])


def test_single_cooperator_pays_the_whole_failure_cost():
    payoff = material_payoff(make_params(), ["F", "nF", "nF"]).as_array()
    assert payoff == pytest.approx([-0.6, 0.0, 0.0])


def test_critical_count_is_the_success_branch():
    payoff = material_payoff(make_params(p=[0.9, 0.9, 0.7]), ["F", "F", "nF"]).as_array()
    assert payoff == pytest.approx([0.6, 0.6, 0.7])


def test_budget_identity():
    params = make_params(n=5, m_star=3, alpha=0.4, gamma=0.25, p=[0.9, 0.8, 0.7, 0.6, 0.5])
    for flags in itertools.product((False, True), repeat=5):
        m = sum(flags)
        if m == 0:
            continue
        r = material_payoff(params, flags).as_array()
        if m >= 3:
            paid = np.sum((params.p - r)[list(flags)])
            assert paid == pytest.approx(3 * 0.4)
        else:
            assert -np.sum(r) == pytest.approx(3 * 0.25)


def test_zero_empathy_keeps_material_payoffs():
    params = make_params(p=[0.9, 0.4, 0.6])
    for flags in itertools.product((False, True), repeat=3):
        assert np.array_equal(empathic_payoff(params, flags).as_array(), material_payoff(params, flags).as_array())


def test_empathic_deviation_matches_hand_expansion():
    params = make_params(p=[0.9] * 3, lam=0.5)
    all_forward = empathic_payoff(params, ["F"] * 3)[0]
    one_defects = empathic_payoff(params, ["nF", "F", "F"])[0]
    assert all_forward == pytest.approx(0.7 + 0.5 * 0.7 * 2)
    assert one_defects == pytest.approx(0.9 + 0.5 * 0.6 * 2)
    assert one_defects - all_forward == pytest.approx(0.1)


def test_pivotal_player_prefers_to_cooperate():
    params = make_params(p=[0.9] * 3, lam=0.5)
    audit = is_equilibrium(params, ["F", "F", "nF"], "empathic")
    assert audit.current[0] == pytest.approx(0.6 + 0.5 * 0.6 + 0.5 * 0.9)
    assert audit.deviated[0] == pytest.approx(0.5 * -0.6)
    assert audit.gains[0] < 0


@pytest.mark.parametrize(
    "kwargs",
    [dict(), dict(n=4, m_star=3), dict(n=5, m_star=2, alpha=1.0, gamma=0.1), dict(p=[0.2, 0.9, 0.5])],
)
def test_nobody_forwarding_is_a_material_equilibrium(kwargs):
    params = make_params(**kwargs)
    assert is_equilibrium(params, ["nF"] * params.n, "material").is_equilibrium


def test_audit_agrees_with_exhaustive_deviation_scan():
    params = make_params(n=4, m_star=2, alpha=0.5, gamma=0.2, p=[0.9, 0.3, 0.6, 0.45])
    for flags in itertools.product((False, True), repeat=4):
        base = material_payoff(params, flags).as_array()
        stable = True
        for i in range(4):
            for action in (False, True):
                trial = list(flags)
                trial[i] = action
                if material_payoff(params, trial)[i] > base[i] + 1e-12:
                    stable = False
        assert is_equilibrium(params, flags, "material").is_equilibrium is stable


def test_kindness_is_half_the_cost_share():
    params = make_params(**RECIPROCAL)
    kind, perceived = service_kindness(params, ["F", "F", "F", "nF"])
    assert kind[0, 1] == pytest.approx(3 / (2 * 3) * 0.6, abs=1e-12)
    assert kind[3, 0] == pytest.approx(-3 / (2 * 3) * 0.6, abs=1e-12)
    assert perceived[0, 3] == pytest.approx(-0.3, abs=1e-12)
    assert np.all(np.diag(kind) == 0)
    kind, perceived = service_kindness(params, ["F", "nF", "nF", "nF"])
    assert kind[0, 2] == pytest.approx(3 / 2 * 0.3, abs=1e-12)
    assert kind[1, 0] == pytest.approx(-3 / 2 * 0.3, abs=1e-12)
    assert perceived[1, 0] == pytest.approx(0.45, abs=1e-12)


def test_critical_cooperators_sustained_by_reciprocity():
    params = make_params(**RECIPROCAL)
    profile = ["F", "F", "F", "nF"]
    lower, upper = sustaining_range(params, profile, "reciprocity")
    assert lower == pytest.approx(0.1 / 0.18)
    assert upper == pytest.approx(0.45 / 0.54)
    assert is_equilibrium(params.with_level(0.7, "reciprocity"), profile, "reciprocity").is_equilibrium
    assert not is_equilibrium(params.with_level(0.3, "reciprocity"), profile, "reciprocity").is_equilibrium
    assert not is_equilibrium(params, profile, "material").is_equilibrium


def test_empathic_sustaining_threshold():
    params = make_params(**PIVOTAL)
    lower, upper = sustaining_range(params, ["F", "F", "nF"], "empathic")
    assert lower == pytest.approx(0.2)
    assert upper == pytest.approx(1.0)
    assert is_equilibrium(params.with_level(0.3, "empathic"), ["F", "F", "nF"], "empathic").is_equilibrium


def test_unsustainable_profile_has_no_range():
    # a lone forwarder pays 2 * gamma whatever the others feel
    assert sustaining_range(make_params(), ["F", "nF", "nF"], "empathic") is None


def test_material_payoffs_have_no_level():
    with pytest.raises(InvalidParameterError):
        sustaining_range(make_params(), ["nF"] * 3, "material")


def test_embedded_game_reproduces_the_audit():
    grid = SimplexGrid(1, 2)
    sustained = to_finite_game(make_params(lam=0.3, **PIVOTAL))
    gaps, values = best_response_gaps(sustained, pure_policy(sustained, grid, [1, 1, 0]), grid)
    assert np.all(gaps <= 1e-9)
    assert values[0] == pytest.approx(-0.1 - 0.3 * 0.1)
    failing = to_finite_game(make_params(lam=0.0, **PIVOTAL))
    gaps, _ = best_response_gaps(failing, pure_policy(failing, grid, [1, 1, 0]), grid)
    assert gaps[0] == pytest.approx(0.1)


def test_embedded_game_settles_on_nobody_forwarding():
    game = to_finite_game(make_params(), "material")
    report = mean_field_equilibrium(game, SimplexGrid(1, 2))
    assert report.converged
    assert report.iterations == 0


def test_reciprocity_has_no_embedding():
    with pytest.raises(InvalidParameterError):
        to_finite_game(make_params(), "reciprocity")


def test_path_success_is_a_product():
    assert path_success_probability([0.9, 0.8]) == pytest.approx(0.72)
    with pytest.raises(InvalidParameterError):
        path_success_probability([1.2])


def test_sampled_payoffs_match_expectation():
    hops = [[0.9, 0.8], [0.5], [1.0]]
    params = make_params(p=[path_success_probability(h) for h in hops])
    draws = sample_material_payoffs(params, hops, ["F"] * 3, samples=100_000, seed=11)
    assert draws.shape == (100_000, 3)
    expected = material_payoff(params, ["F"] * 3).as_array()
    assert draws.mean(axis=0) == pytest.approx(expected, abs=0.01)
    again = sample_material_payoffs(params, hops, ["F"] * 3, samples=100_000, seed=11)
    assert np.array_equal(draws, again)


def test_tables():
    params = make_params()
    table = equilibrium_table(params)
    assert len(table) == 8
    assert table.loc[table["profile"] == "nF,nF,nF", "equilibrium"].item()
    audit = is_equilibrium(params, ["F", "nF", "nF"])
    assert list(deviation_table(audit).columns) == ["player", "action", "payoff", "deviation_payoff", "gain"]


@pytest.mark.parametrize(
    "kwargs, error",
    [
        (dict(n=2), InvalidParameterError),
        (dict(m_star=1), InvalidParameterError),
        (dict(p=[0.5, 1.5, 0.5]), InvalidParameterError),
        (dict(alpha=0.0), InvalidParameterError),
    ],
)
def test_parameter_validation(kwargs, error):
    with pytest.raises(error):
        make_params(**kwargs)


def test_unknown_action_rejected():
    with pytest.raises(StructuralError):
        material_payoff(make_params(), ["F", "maybe", "nF"])
