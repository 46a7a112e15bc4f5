import numpy as np
import pytest

from empathic_mftg.core import EmpathyMatrix, empathic_transform
from empathic_mftg.errors import InvalidParameterError, RiccatiSingularityError
from empathic_mftg.lq_game import (
    LqGameParams,
    analytic_cost,
    cost_table,
    empathic_weights,
    mean_state,
    mean_state_table,
    riccati_sweep,
    schedule_table,
    simulate,
)

LAMBDA_GRID = [0.0, 0.25, 0.5, 0.75, 1.0]


def make_params(n=2, T=10, lam=0.3, **overrides):
    values = dict(
        n=n,
        T=T,
        alpha=0.9,
        alpha_bar=0.1,
        b=0.5,
        sigma=0.3,
        q=1.0,
        q_bar=0.5,
        c=1.0,
        qT=1.0,
        qT_bar=0.5,
        lam=EmpathyMatrix.uniform(n, lam),
        m0=1.0,
        var0=0.2,
    )
    values.update(overrides)
    return LqGameParams(**values)


def test_terminal_conditions():
    params = make_params(qT=np.array([1.0, 2.0]), qT_bar=np.array([0.5, 0.1]))
    schedule = riccati_sweep(params)
    assert schedule.beta[:, -1] == pytest.approx([1.0 + 0.3 * 2.0, 2.0 + 0.3 * 1.0])
    assert schedule.gamma[:, -1] == pytest.approx([1.6 + 0.5 + 0.03, 2.3 + 0.1 + 0.15])


def test_empathic_weights_follow_core_transform():
    params = make_params(q=np.array([[1.0] * 10, [3.0] * 10]))
    weights = empathic_weights(params)
    expected = empathic_transform(np.array([1.0, 3.0]), params.lam).as_array()
    assert weights.q[:, 4] == pytest.approx(expected)


def test_single_player_scalar_recursion():
    params = make_params(n=1, T=5, lam=0.0)
    schedule = riccati_sweep(params)
    beta = 1.0
    for t in range(4, -1, -1):
        eta = -0.9 * 0.5 * beta / (1.0 + 0.25 * beta)
        assert schedule.eta[0, t] == pytest.approx(eta)
        beta = 1.0 + 0.81 * beta - (0.9 * 0.5 * beta) ** 2 / (1.0 + 0.25 * beta)
        assert schedule.beta[0, t] == pytest.approx(beta)


def test_no_control_authority():
    params = make_params(b=0.0)
    schedule = riccati_sweep(params)
    assert np.all(schedule.eta == 0) and np.all(schedule.eta_bar == 0)
    q_lam = 1.3
    for t in range(params.T):
        assert schedule.beta[0, t] == pytest.approx(q_lam + 0.81 * schedule.beta[0, t + 1])
    assert mean_state(params, schedule) == pytest.approx(1.0**np.arange(11))


def test_value_coefficients_non_negative():
    schedule = riccati_sweep(make_params(n=3, lam=0.4))
    assert np.all(schedule.beta >= 0) and np.all(schedule.gamma >= 0)


def test_deterministic_cost_is_gamma_times_mean_squared():
    params = make_params(sigma=0.0, var0=0.0, m0=1.5)
    schedule = riccati_sweep(params)
    cost = analytic_cost(params, schedule)
    assert cost == pytest.approx(schedule.gamma[:, 0] * 2.25)
    sim = simulate(params, schedule, paths=3, seed=0)
    assert sim.mean_cost == pytest.approx(cost, rel=1e-12)


def test_variance_only_cost():
    params = make_params(sigma=0.0, var0=0.7, m0=0.0)
    schedule = riccati_sweep(params)
    assert analytic_cost(params, schedule) == pytest.approx(schedule.beta[:, 0] * 0.7)
    assert np.all(mean_state(params, schedule) == 0)


def test_monte_carlo_matches_analytic_cost():
    params = make_params()
    schedule = riccati_sweep(params)
    analytic = analytic_cost(params, schedule)
    sim = simulate(params, schedule, paths=100_000, seed=42)
    assert np.all(np.abs(sim.mean_cost - analytic) <= 0.02 * analytic)
    assert np.all(np.abs(sim.mean_cost - analytic) <= 3 * sim.std_error)
    assert sim.mean_state == pytest.approx(mean_state(params, schedule), abs=0.02)


@pytest.mark.parametrize("noise", ["rademacher", "uniform"])
def test_other_noise_laws_share_second_moments(noise):
    params = make_params(noise=noise)
    schedule = riccati_sweep(params)
    sim = simulate(params, schedule, paths=50_000, seed=5)
    assert sim.mean_cost == pytest.approx(analytic_cost(params, schedule), rel=0.03)


def test_same_seed_is_bit_identical():
    params = make_params()
    schedule = riccati_sweep(params)
    first = simulate(params, schedule, paths=25_000, seed=9)
    second = simulate(params, schedule, paths=25_000, seed=9, max_workers=3)
    assert np.array_equal(first.mean_cost, second.mean_cost)
    assert np.array_equal(first.std_error, second.std_error)


def test_empathy_raises_gamma_and_lowers_mean():
    schedules = [riccati_sweep(make_params(lam=lam)) for lam in LAMBDA_GRID]
    params = [make_params(lam=lam) for lam in LAMBDA_GRID]
    gamma0 = [s.gamma[0, 0] for s in schedules]
    assert np.all(np.diff(gamma0) >= 0)
    for earlier, later in zip(schedules, schedules[1:]):
        assert np.all(later.eta_bar <= earlier.eta_bar + 1e-15)
    means = [mean_state(p, s) for p, s in zip(params, schedules)]
    for earlier, later in zip(means, means[1:]):
        assert np.all(later <= earlier + 1e-15)


def test_ill_conditioned_step_raises():
    with pytest.raises(RiccatiSingularityError) as info:
        riccati_sweep(make_params(), cond_limit=1.0)
    assert info.value.t == 9


def test_negative_empathic_weight_rejected():
    params = make_params(q=np.array([[1.0] * 10, [2.0] * 10]), lam=-1.0)
    with pytest.raises(InvalidParameterError):
        riccati_sweep(params)


def test_control_weight_must_be_positive():
    with pytest.raises(InvalidParameterError):
        make_params(c=0.0)


def test_tables():
    params = make_params(T=3)
    schedule = riccati_sweep(params)
    table = schedule_table(schedule)
    assert len(table) == 2 * 4
    assert table[table["t"] == 3]["eta"].isna().all()
    sim = simulate(params, schedule, paths=100, seed=1)
    costs = cost_table(analytic_cost(params, schedule), sim)
    assert list(costs.columns) == ["player", "analytic", "simulated", "std_error", "relative_error"]
    assert list(mean_state_table(params, schedule, sim).columns) == ["t", "analytic_mean", "empirical_mean"]
