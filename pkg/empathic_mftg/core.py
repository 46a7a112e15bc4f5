"""Empathy coefficients, the empathic payoff transform, kindness/reciprocity and the
fairness-gap law.

Every value type here is immutable after construction (arrays are frozen), so
the operations are pure functions that can be called from concurrent workers.
"""

from __future__ import annotations

import logging
from collections.abc import Collection, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidParameterError, StructuralError, UndefinedRatioError

logger = logging.getLogger(__name__)

PROB_TOL = 1e-12

Neighbors = Sequence[Collection[int]]


def _frozen(values: ArrayLike, ndim: int | None = None) -> NDArray[np.float64]:
    arr = np.array(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise StructuralError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def check_probability_vector(vec: ArrayLike, what: str = "mixed action") -> NDArray[np.float64]:
    """Validate and freeze a probability vector (non-negative, sums to 1 within 1e-12)."""
    arr = _frozen(vec, ndim=1)
    if arr.size == 0:
        raise StructuralError(f"{what} is empty")
    if np.any(arr < -PROB_TOL) or abs(arr.sum() - 1.0) > PROB_TOL:
        raise InvalidParameterError(f"{what} {arr.tolist()} is not a probability vector")
    return arr


# === Domain types ===


@dataclass(frozen=True, eq=False)
class EmpathyMatrix:
    """Pairwise empathy coefficients lambda[i][j] with a zero diagonal.

    Positive entries are partial altruism, negative ones partial spite. Entries
    outside [-1, 1] need ``allow_wide=True``.
    """

    values: NDArray[np.float64]
    allow_wide: bool = False

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise StructuralError(f"empathy matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("empathy matrix has non-finite entries")
        if np.any(np.diag(arr) != 0.0):
            raise InvalidParameterError("empathy matrix diagonal must be 0")
        if not self.allow_wide and np.any(np.abs(arr) > 1.0):
            raise InvalidParameterError(
                "empathy entries must lie in [-1, 1] (set allow_wide to widen the range)"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, ij: tuple[int, int]) -> float:
        return float(self.values[ij])

    @classmethod
    def zeros(cls, n: int) -> EmpathyMatrix:
        return cls(np.zeros((n, n)))

    @classmethod
    def uniform(cls, n: int, lam: float, allow_wide: bool = False) -> EmpathyMatrix:
        arr = np.full((n, n), float(lam))
        np.fill_diagonal(arr, 0.0)
        return cls(arr, allow_wide=allow_wide)

    @classmethod
    def from_pairs(
        cls, n: int, pairs: Mapping[tuple[int, int], float], allow_wide: bool = False
    ) -> EmpathyMatrix:
        arr = np.zeros((n, n))
        for (i, j), lam in pairs.items():
            if i == j:
                raise InvalidParameterError(f"self-empathy lambda[{i}][{i}] is fixed at 0")
            arr[i, j] = lam
        return cls(arr, allow_wide=allow_wide)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], allow_wide: bool = False) -> EmpathyMatrix:
        return cls(np.asarray(rows, dtype=float), allow_wide=allow_wide)


@dataclass(frozen=True, eq=False)
class PayoffProfile:
    """Material (or transformed) payoffs, one entry per player."""

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        arr = _frozen(self.values, ndim=1)
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("payoff profile has non-finite entries")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])

    def __iter__(self) -> Iterator[float]:
        return iter(self.values.tolist())

    def as_array(self) -> NDArray[np.float64]:
        return self.values


def as_profile(payoffs: PayoffProfile | ArrayLike) -> PayoffProfile:
    return payoffs if isinstance(payoffs, PayoffProfile) else PayoffProfile(np.asarray(payoffs))


@dataclass(frozen=True, eq=False)
class BeliefSystem:
    """First-order beliefs b_ij and second-order beliefs b~_ijk over mixed actions.

    ``first_order[(i, j)]`` is i's belief on j's mixed action and
    ``second_order[(i, j, k)]`` is what i believes j believes k plays.
    """

    first_order: Mapping[tuple[int, int], NDArray[np.float64]]
    second_order: Mapping[tuple[int, int, int], NDArray[np.float64]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        first = {
            key: check_probability_vector(v, f"belief b{key}") for key, v in self.first_order.items()
        }
        second = {
            key: check_probability_vector(v, f"belief b~{key}") for key, v in self.second_order.items()
        }
        object.__setattr__(self, "first_order", first)
        object.__setattr__(self, "second_order", second)

    def first(self, i: int, j: int) -> NDArray[np.float64]:
        try:
            return self.first_order[(i, j)]
        except KeyError:
            raise StructuralError(f"missing first-order belief b_{i}{j}") from None

    def second(self, i: int, j: int, k: int) -> NDArray[np.float64]:
        try:
            return self.second_order[(i, j, k)]
        except KeyError:
            raise StructuralError(f"missing second-order belief b~_{i}{j}{k}") from None

    @classmethod
    def from_profile(cls, profile: Sequence[ArrayLike]) -> BeliefSystem:
        """Beliefs that are consistent with a (mixed) action profile."""
        n = len(profile)
        first = {(i, j): profile[j] for i in range(n) for j in range(n) if i != j}
        second = {
            (i, j, k): profile[k]
            for i in range(n)
            for j in range(n)
            for k in range(n)
            if i != j and k != j
        }
        return cls(first, second)


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    """Finite normal-form game: ``payoffs[j]`` is player j's payoff tensor."""

    actions: tuple[tuple[str, ...], ...]
    payoffs: NDArray[np.float64]

    def __post_init__(self) -> None:
        actions = tuple(tuple(a) for a in self.actions)
        for k, acts in enumerate(actions):
            if not acts:
                raise StructuralError(f"player {k} has an empty action set")
        arr = _frozen(self.payoffs)
        expected = (len(actions), *(len(a) for a in actions))
        if arr.shape != expected:
            raise StructuralError(f"payoff tensor shape {arr.shape} does not match {expected}")
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "payoffs", arr)

    @property
    def n(self) -> int:
        return len(self.actions)

    def action_index(self, player: int, action: int | str) -> int:
        if isinstance(action, str):
            try:
                return self.actions[player].index(action)
            except ValueError:
                raise StructuralError(f"player {player} has no action {action!r}") from None
        if not 0 <= action < len(self.actions[player]):
            raise StructuralError(f"player {player} has no action index {action}")
        return int(action)

    def pure(self, player: int, action: int | str) -> NDArray[np.float64]:
        vec = np.zeros(len(self.actions[player]))
        vec[self.action_index(player, action)] = 1.0
        return vec

    def expected_payoff(self, j: int, mixed: Sequence[ArrayLike]) -> float:
        """Player j's expected payoff when every player k plays ``mixed[k]``."""
        if len(mixed) != self.n:
            raise StructuralError(f"expected {self.n} mixed actions, got {len(mixed)}")
        value = self.payoffs[j]
        for k in range(self.n):
            vec = np.asarray(mixed[k], dtype=float)
            if vec.shape != (len(self.actions[k]),):
                raise StructuralError(f"mixed action of player {k} has shape {vec.shape}")
            value = np.tensordot(vec, value, axes=([0], [0]))
        return float(value)


# === Helpers ===


def neighbor_mask(n: int, neighbors: Neighbors | None = None) -> NDArray[np.bool_]:
    """Boolean n x n adjacency with a false diagonal; ``None`` means everyone."""
    if neighbors is None:
        mask = np.ones((n, n), dtype=bool)
    else:
        if len(neighbors) != n:
            raise StructuralError(f"expected {n} neighbour sets, got {len(neighbors)}")
        mask = np.zeros((n, n), dtype=bool)
        for i, ns in enumerate(neighbors):
            for j in ns:
                if not 0 <= j < n:
                    raise StructuralError(f"neighbour {j} of player {i} is out of range")
                mask[i, j] = True
    np.fill_diagonal(mask, False)
    return mask


def empathy_regime(lam: float) -> str:
    """Label a single coefficient by its sign."""
    if abs(lam) > 1.0:
        return "widened"
    if lam > 0:
        return "partially altruistic"
    if lam < 0:
        return "partially spiteful"
    return "selfish"


def player_regime(lam: EmpathyMatrix, i: int, neighbors: Neighbors | None = None) -> str:
    """Label player i's attitude across her neighbours (may be mixed)."""
    row = lam.values[i][neighbor_mask(lam.n, neighbors)[i]]
    labels = {empathy_regime(float(v)) for v in row if v != 0.0}
    if not labels:
        return "selfish"
    return labels.pop() if len(labels) == 1 else "mixed"


# === Operations ===


def empathic_transform(
    material: PayoffProfile | ArrayLike,
    lam: EmpathyMatrix,
    neighbors: Neighbors | None = None,
) -> PayoffProfile:
    """Instant empathic payoff r_i + sum_{j in N_i, j != i} lambda_ij r_j.

    Args:
        material: Material payoffs, one per player.
        lam: Empathy matrix of matching size.
        neighbors: Optional neighbour sets; defaults to "all other players".

    Returns:
        The transformed payoff profile.
    """
    r = as_profile(material).values
    if r.shape[0] != lam.n:
        raise StructuralError(f"{r.shape[0]} payoffs for a {lam.n}-player empathy matrix")
    return PayoffProfile(empathy_operator(lam, neighbors) @ r)


def empathy_operator(lam: EmpathyMatrix, neighbors: Neighbors | None = None) -> NDArray[np.float64]:
    """The linear map behind :func:`empathic_transform`: identity plus the neighbour-masked lambdas.

    Useful for transforming whole payoff tensors with a leading player axis.
    """
    return np.eye(lam.n) + np.where(neighbor_mask(lam.n, neighbors), lam.values, 0.0)


def _belief_mixture(game: NormalFormGame, i: int, beliefs: BeliefSystem) -> list[NDArray[np.float64]]:
    return [beliefs.first(i, k) if k != i else np.zeros(len(game.actions[i])) for k in range(game.n)]


def kindness(
    game: NormalFormGame, i: int, j: int, a_i: int | str, beliefs: BeliefSystem
) -> float:
    """i's kindness to j: r_j(a_i, b_i) minus the midpoint of sup/inf over a'_i.

    Positive values mean i is kind to j.
    """
    mixed = _belief_mixture(game, i, beliefs)

    def payoff_of_j(action: int) -> float:
        mixed[i] = game.pure(i, action)
        return game.expected_payoff(j, mixed)

    values = [payoff_of_j(a) for a in range(len(game.actions[i]))]
    chosen = payoff_of_j(game.action_index(i, a_i))
    return chosen - 0.5 * (max(values) + min(values))


def perceived_kindness(game: NormalFormGame, i: int, j: int, beliefs: BeliefSystem) -> float:
    """kappa~_iji: what i believes j believes i receives, against the sup/inf bracket."""
    mixed = [
        beliefs.first(i, j) if k == j else beliefs.second(i, j, k) for k in range(game.n)
    ]
    believed = game.expected_payoff(i, mixed)
    values = []
    for b in range(len(game.actions[j])):
        mixed[j] = game.pure(j, b)
        values.append(game.expected_payoff(i, mixed))
    return believed - 0.5 * (max(values) + min(values))


def kindness_matrices(
    game: NormalFormGame, profile: Sequence[int | str], beliefs: BeliefSystem
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(kappa, kappa~) as n x n arrays with zero diagonals for a pure profile."""
    n = game.n
    if len(profile) != n:
        raise StructuralError(f"profile has {len(profile)} actions for {n} players")
    kind = np.zeros((n, n))
    perceived = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                kind[i, j] = kindness(game, i, j, profile[i], beliefs)
                perceived[i, j] = perceived_kindness(game, i, j, beliefs)
    return kind, perceived


def beliefs_consistent(
    profile: Sequence[ArrayLike], beliefs: BeliefSystem, tol: float = 1e-9
) -> bool:
    """Equilibrium consistency m^{a_k} = b_jk = b~_ijk for every stored belief."""
    actual = [np.asarray(p, dtype=float) for p in profile]
    for (_, k), b in beliefs.first_order.items():
        if np.max(np.abs(b - actual[k])) > tol:
            return False
    for (_, _, k), b in beliefs.second_order.items():
        if np.max(np.abs(b - actual[k])) > tol:
            return False
    return True


def reciprocity_payoff(
    material: PayoffProfile | ArrayLike,
    sensitivity: EmpathyMatrix,
    kind: ArrayLike,
    perceived: ArrayLike,
    neighbors: Neighbors | None = None,
) -> PayoffProfile:
    """r_i + sum_j lambda_ij * kappa_ij * kappa~_iji.

    ``sensitivity`` holds the reciprocity sensitivities, kept separate from the
    altruism coefficients used by :func:`empathic_transform`.
    """
    r = as_profile(material).values
    n = sensitivity.n
    kappa = np.asarray(kind, dtype=float)
    kappa_tilde = np.asarray(perceived, dtype=float)
    if r.shape[0] != n or kappa.shape != (n, n) or kappa_tilde.shape != (n, n):
        raise StructuralError("reciprocity inputs have inconsistent dimensions")
    weights = np.where(neighbor_mask(n, neighbors), sensitivity.values, 0.0)
    return PayoffProfile(r + np.sum(weights * kappa * kappa_tilde, axis=1))


def gap_ratio(r: PayoffProfile | ArrayLike, lambda_scalar: float, i: int, j: int) -> float:
    """|R_i^lambda - R_j^lambda| / |R_i - R_j| under uniform symmetric empathy.

    The ratio equals 1 - lambda exactly, for any number of players.
    """
    payoffs = as_profile(r)
    if not 0.0 <= lambda_scalar <= 1.0:
        raise InvalidParameterError(f"uniform empathy {lambda_scalar} is outside [0, 1]")
    n = len(payoffs)
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise StructuralError(f"players ({i}, {j}) are not two distinct players of {n}")
    material_gap = payoffs[i] - payoffs[j]
    if material_gap == 0.0:
        raise UndefinedRatioError(f"r_{i} = r_{j}: the payoff-gap ratio is undefined")
    transformed = empathic_transform(payoffs, EmpathyMatrix.uniform(n, lambda_scalar))
    return abs(transformed[i] - transformed[j]) / abs(material_gap)
