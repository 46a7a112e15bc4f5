import numpy as np
import pytest

from empathic_mftg.core import (
    BeliefSystem,
    EmpathyMatrix,
    NormalFormGame,
    PayoffProfile,
    beliefs_consistent,
    empathic_transform,
    empathy_regime,
    gap_ratio,
    kindness,
    kindness_matrices,
    perceived_kindness,
    player_regime,
    reciprocity_payoff,
)
from empathic_mftg.errors import InvalidParameterError, StructuralError, UndefinedRatioError


def test_empathy_matrix_rejects_self_empathy():
    with pytest.raises(InvalidParameterError):
        EmpathyMatrix(np.array([[0.5, 0.0], [0.0, 0.0]]))


def test_empathy_matrix_range_needs_widening_flag():
    with pytest.raises(InvalidParameterError):
        EmpathyMatrix.uniform(3, 1.5)
    wide = EmpathyMatrix.uniform(3, 1.5, allow_wide=True)
    assert wide[0, 1] == 1.5
    assert wide[1, 1] == 0.0


def test_empathy_matrix_is_read_only():
    lam = EmpathyMatrix.uniform(2, 0.3)
    with pytest.raises(ValueError):
        lam.values[0, 1] = 0.9


@pytest.mark.parametrize(
    "pairs, expected",
    [
        ({}, (2.0, 1.0)),
        ({(0, 1): 0.5}, (2.5, 1.0)),
        ({(0, 1): -1.0}, (1.0, 1.0)),
    ],
)
def test_empathic_transform_two_players(pairs, expected):
    lam = EmpathyMatrix.from_pairs(2, pairs)
    assert tuple(empathic_transform((2.0, 1.0), lam)) == pytest.approx(expected)


def test_empathic_transform_dimension_mismatch():
    with pytest.raises(StructuralError):
        empathic_transform((1.0, 2.0, 3.0), EmpathyMatrix.zeros(2))


def test_empathic_transform_is_linear():
    rng = np.random.default_rng(7)
    lam = EmpathyMatrix(rng.uniform(-1, 1, (4, 4)) * (1 - np.eye(4)))
    r, s = rng.normal(size=4), rng.normal(size=4)
    lhs = empathic_transform(2.0 * r - 3.0 * s, lam).as_array()
    rhs = 2.0 * empathic_transform(r, lam).as_array() - 3.0 * empathic_transform(s, lam).as_array()
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_empathic_transform_respects_neighbours():
    lam = EmpathyMatrix.uniform(3, 0.5)
    out = empathic_transform((1.0, 2.0, 4.0), lam, neighbors=[{1}, {0, 2}, set()])
    assert tuple(out) == pytest.approx((2.0, 4.5, 4.0))


@pytest.mark.parametrize("lam, expected", [(0.0, 1.0), (1.0, 0.0), (0.25, 0.75)])
def test_gap_ratio_examples(lam, expected):
    assert gap_ratio((5.0, 2.0), lam, 0, 1) == pytest.approx(expected, abs=1e-12)


def test_gap_ratio_law_on_random_profiles():
    rng = np.random.default_rng(2024)
    for lam in np.arange(1, 10) / 10:
        for _ in range(100):
            n = int(rng.integers(2, 6))
            r = rng.normal(size=n)
            assert gap_ratio(r, float(lam), 0, 1) == pytest.approx(1 - lam, abs=1e-12)


def test_gap_ratio_undefined_for_ties():
    with pytest.raises(UndefinedRatioError):
        gap_ratio((3.0, 3.0), 0.5, 0, 1)


def _service_game():
    # player 0 chooses F/nF, player 1's payoff is 1 under F and 0 under nF
    payoffs = np.zeros((2, 2, 2))
    payoffs[1, 0, :] = 1.0
    return NormalFormGame((("F", "nF"), ("F", "nF")), payoffs)


def test_kindness_of_forwarding_is_half():
    game = _service_game()
    beliefs = BeliefSystem.from_profile([game.pure(0, "F"), np.array([0.3, 0.7])])
    assert kindness(game, 0, 1, "F", beliefs) == pytest.approx(0.5)
    assert kindness(game, 0, 1, "nF", beliefs) == pytest.approx(-0.5)


def test_kindness_zero_when_payoff_does_not_depend_on_action():
    payoffs = np.ones((2, 2, 2))
    game = NormalFormGame((("a", "b"), ("a", "b")), payoffs)
    beliefs = BeliefSystem.from_profile([game.pure(0, 0), game.pure(1, 0)])
    assert kindness(game, 0, 1, "a", beliefs) == 0.0


def test_empty_action_set_is_structural():
    with pytest.raises(StructuralError):
        NormalFormGame(((), ("a",)), np.zeros((2, 0, 1)))


def test_perceived_kindness_reads_second_order_beliefs():
    game = _service_game()
    # player 1 is the beneficiary; from 1's view, 0 is believed to play F
    beliefs = BeliefSystem.from_profile([game.pure(0, "F"), game.pure(1, "nF")])
    assert perceived_kindness(game, 1, 0, beliefs) == pytest.approx(0.5)


def test_kindness_matrices_zero_diagonal():
    game = _service_game()
    beliefs = BeliefSystem.from_profile([game.pure(0, "F"), game.pure(1, "F")])
    kind, perceived = kindness_matrices(game, ["F", "F"], beliefs)
    assert np.all(np.diag(kind) == 0) and np.all(np.diag(perceived) == 0)
    assert kind[0, 1] == pytest.approx(0.5)


def test_reciprocity_identity_at_zero_sensitivity():
    kind = np.array([[0.0, 0.3], [-0.2, 0.0]])
    out = reciprocity_payoff((1.0, 2.0), EmpathyMatrix.zeros(2), kind, kind)
    assert tuple(out) == (1.0, 2.0)


def test_reciprocity_mutual_kindness_increases_payoff():
    k = np.array([[0.0, 0.25], [0.25, 0.0]])
    out = reciprocity_payoff((1.0, 1.0), EmpathyMatrix.uniform(2, 0.4), k, k)
    assert out[0] == pytest.approx(1.0 + 0.4 * 0.0625)


def test_reciprocity_opposite_signs_decrease_payoff():
    kind = np.array([[0.0, 0.5], [0.0, 0.0]])
    perceived = np.array([[0.0, -0.4], [0.0, 0.0]])
    out = reciprocity_payoff((1.0, 1.0), EmpathyMatrix.uniform(2, 0.5), kind, perceived)
    assert out[0] == pytest.approx(1.0 - 0.5 * 0.2)


def test_beliefs_from_profile_are_consistent():
    profile = [np.array([0.2, 0.8]), np.array([1.0, 0.0]), np.array([0.5, 0.5])]
    beliefs = BeliefSystem.from_profile(profile)
    assert beliefs_consistent(profile, beliefs)
    assert not beliefs_consistent([profile[1], profile[0], profile[2]], beliefs)


def test_belief_system_rejects_non_probability():
    with pytest.raises(InvalidParameterError):
        BeliefSystem({(0, 1): np.array([0.6, 0.6])})


def test_payoff_profile_rejects_nan():
    with pytest.raises(InvalidParameterError):
        PayoffProfile(np.array([1.0, np.nan]))


@pytest.mark.parametrize(
    "lam, label",
    [(0.0, "selfish"), (0.4, "partially altruistic"), (-0.4, "partially spiteful"), (1.5, "widened")],
)
def test_empathy_regime(lam, label):
    assert empathy_regime(lam) == label


def test_player_regime_mixed():
    lam = EmpathyMatrix.from_rows([[0, 0.5, -0.5], [0, 0, 0], [0.2, 0.2, 0]])
    assert player_regime(lam, 0) == "mixed"
    assert player_regime(lam, 1) == "selfish"
    assert player_regime(lam, 2) == "partially altruistic"
