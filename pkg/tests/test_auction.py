import numpy as np
import pytest

from empathic_mftg.auction import (
    BidQuery,
    CostDistribution,
    benefit,
    bid_curve,
    bid_price,
    tilted_cdf,
    uniform_bid_closed_form,
)
from empathic_mftg.errors import DegenerateConditioningError, InvalidParameterError

UNIFORM = CostDistribution.uniform(1.0)


def test_tilted_cdf_examples():
    assert tilted_cdf(UNIFORM, 0.0, 0.3) == pytest.approx(0.3)
    assert tilted_cdf(UNIFORM, 1.0, 0.5) == pytest.approx(0.75)
    assert tilted_cdf(UNIFORM, 0.7, 1.0) == 1.0


def test_tilted_cdf_invalid_exponent():
    with pytest.raises(InvalidParameterError):
        tilted_cdf(UNIFORM, -1.0, 0.5)


@pytest.mark.parametrize("lam", [-0.9, -0.5, 0.0, 0.5, 2.0])
def test_tilted_cdf_is_a_cdf(lam):
    grid = np.linspace(0.0, 1.0, 101)
    values = np.array([tilted_cdf(UNIFORM, lam, c) for c in grid])
    assert values[0] == 0.0
    assert values[-1] == 1.0
    assert np.all(np.diff(values) >= 0)


def test_material_bid_matches_half_way_rule():
    for c in np.linspace(0.0, 0.98, 50):
        assert bid_price(BidQuery(c, 0.0, UNIFORM)) == pytest.approx((1 + c) / 2, abs=1e-8)


def test_spiteful_bid_example():
    assert bid_price(BidQuery(0.0, 1.0, UNIFORM)) == pytest.approx(1 / 3, abs=1e-10)
    assert bid_price(BidQuery(0.5, 0.0, UNIFORM)) == pytest.approx(0.75, abs=1e-10)


@pytest.mark.parametrize("lam", [-0.5, -0.25, 0.0, 0.3, 1.0, 2.0])
@pytest.mark.parametrize("c", [0.0, 0.2, 0.6, 0.9])
def test_quadrature_matches_closed_form(c, lam):
    assert bid_price(BidQuery(c, lam, UNIFORM)) == pytest.approx(uniform_bid_closed_form(c, lam), abs=1e-8)


def test_closed_form_with_wider_support():
    d = CostDistribution.uniform(4.0)
    assert bid_price(BidQuery(1.0, 0.5, d)) == pytest.approx(uniform_bid_closed_form(1.0, 0.5, 4.0), abs=1e-8)


def test_price_near_upper_bound_tends_to_upper():
    price = bid_price(BidQuery(1.0 - 1e-6, 0.0, UNIFORM))
    assert 1.0 - 1e-6 <= price <= 1.0


def test_price_at_upper_bound_is_degenerate():
    with pytest.raises(DegenerateConditioningError):
        bid_price(BidQuery(1.0, 0.0, UNIFORM))


def test_bid_query_rejects_bad_lambda():
    with pytest.raises(InvalidParameterError):
        BidQuery(0.2, -1.5, UNIFORM)


def test_spite_lowers_and_altruism_raises_the_bid():
    curve = bid_curve(UNIFORM, [0.0, 0.5, 1.0], [0.2])
    assert np.all(np.diff(curve.loc[0.2].to_numpy()) < 0)
    altruistic = bid_curve(UNIFORM, [0.0, -0.25, -0.5], [0.2])
    assert np.all(np.diff(altruistic.loc[0.2].to_numpy()) > 0)


def test_monotone_over_lambda_ranges():
    spite = np.linspace(0.0, 2.0, 21)
    prices = [bid_price(BidQuery(0.3, lam, UNIFORM)) for lam in spite]
    assert np.all(np.diff(prices) < 0)
    altruism = np.linspace(0.0, 0.9, 10)
    prices = [bid_price(BidQuery(0.3, -lam, UNIFORM)) for lam in altruism]
    assert np.all(np.diff(prices) > 0)


def test_finite_difference_derivative_is_non_positive():
    d = CostDistribution.truncated_exponential(2.0, 1.0)
    for c in (0.1, 0.4, 0.7):
        for lam in (0.0, 0.5, 1.5):
            hi = bid_price(BidQuery(c, lam + 1e-4, d))
            lo = bid_price(BidQuery(c, lam, d))
            assert (hi - lo) / 1e-4 <= 1e-6


def test_single_lambda_column_is_material_bid():
    curve = bid_curve(UNIFORM, [0.0], [0.1, 0.5])
    assert list(curve.columns) == [0.0]
    assert curve[0.0].to_numpy() == pytest.approx([0.55, 0.75], abs=1e-8)


def test_altruistic_benefit_grows_with_altruism():
    benefits = [benefit(BidQuery(0.4, -lam, UNIFORM)) for lam in (0.1, 0.4, 0.8)]
    assert all(b >= 0 for b in benefits)
    assert benefits == sorted(benefits)


def test_entry_cost_and_quantity_do_not_move_price():
    base = bid_price(BidQuery(0.3, 0.5, UNIFORM))
    assert bid_price(BidQuery(0.3, 0.5, UNIFORM, entry_cost=2.0, quantity=7.0)) == base


def test_piecewise_linear_from_csv(tmp_path):
    path = tmp_path / "cdf.csv"
    path.write_text("cost,cdf\n0,0\n0.5,0.5\n1,1\n")
    d = CostDistribution.from_csv(path)
    assert d.upper == 1.0
    assert d.pdf(0.25) == pytest.approx(1.0, rel=1e-6)
    assert bid_price(BidQuery(0.2, 0.5, d)) == pytest.approx(uniform_bid_closed_form(0.2, 0.5), abs=1e-8)


def test_invalid_cdf_rejected():
    with pytest.raises(InvalidParameterError):
        CostDistribution.piecewise_linear([0.0, 1.0], [0.0, 0.8])


def test_bid_stays_in_support():
    d = CostDistribution.truncated_exponential(3.0, 2.0)
    for c in np.linspace(0.0, 1.9, 12):
        for lam in (-0.8, 0.0, 3.0):
            p = bid_price(BidQuery(float(c), lam, d))
            assert c <= p <= 2.0
