"""Dynamic programming on the probability simplex for finite-state mean-field-type games.

The DP state is the measure over states itself. Values live on a regular
barycentric grid and are interpolated piecewise-linearly on its Freudenthal
triangulation, which is exact for affine functions, so mean-field-free games
reproduce the classical state-indexed Bellman values. Policies are
state-and-measure feedback: one mixed action per (time, grid measure, state).
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from .core import EmpathyMatrix, Neighbors, empathy_operator
from .errors import InvalidParameterError, KernelValidityError, StructuralError

logger = logging.getLogger(__name__)

MASS_TOL = 1e-12
QUERY_TOL = 1e-9
IMPROVE_TOL = 1e-12
ACTION_STEP = 0.1
MAX_CANDIDATES = 20_000

KernelFn = Callable[[int, int, NDArray, "Sequence[NDArray] | None", tuple[int, ...]], ArrayLike]
PayoffFn = Callable[[int, int, int, NDArray, "Sequence[NDArray] | None", tuple[int, ...]], float]
TerminalFn = Callable[[int, int, NDArray], float]
FeedbackPolicy = list[NDArray[np.float64]]


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All non-negative integer vectors of length ``parts`` summing to ``total``.

    The first one is (total, 0, ..., 0); earlier entries decrease slowest.
    """
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first, *rest)


# === Measures ===


@dataclass(frozen=True, eq=False)
class SimplexMeasure:
    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise StructuralError(f"a measure needs a non-empty weight vector, got shape {w.shape}")
        if np.any(w < -MASS_TOL) or abs(w.sum() - 1.0) > MASS_TOL:
            raise InvalidParameterError(f"weights {w.tolist()} are not a probability vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.size


def _check_rows(kernel: NDArray[np.float64], where: str) -> None:
    if np.any(kernel < -MASS_TOL) or np.any(np.abs(kernel.sum(axis=-1) - 1.0) > MASS_TOL):
        raise KernelValidityError(f"kernel rows at {where} are not probability vectors")


def propagate(
    m: SimplexMeasure | ArrayLike, kernel: ArrayLike, actions: ArrayLike | None = None
) -> SimplexMeasure:
    """Push a measure through a transition kernel.

    Args:
        m: Current measure over S states.
        kernel: (S, S) row-stochastic matrix, or (S, A, S) per-action kernel.
        actions: (S, A) mixed action per state, required with a per-action kernel.

    Raises:
        KernelValidityError: a kernel row is not a probability vector.
    """
    weights = m.weights if isinstance(m, SimplexMeasure) else np.asarray(m, dtype=float)
    q = np.asarray(kernel, dtype=float)
    _check_rows(q, "propagate")
    if q.ndim == 3:
        if actions is None:
            raise StructuralError("a per-action kernel needs a mixed action per state")
        q = np.einsum("sa,sap->sp", np.asarray(actions, dtype=float), q)
    if q.shape != (weights.size, weights.size):
        raise StructuralError(f"kernel shape {q.shape} does not match {weights.size} states")
    return SimplexMeasure(weights @ q)


# === Grid ===


class SimplexGrid:
    """Regular barycentric grid with ``resolution`` points per edge (K = resolution - 1)."""

    def __init__(self, n_states: int, resolution: int):
        if n_states < 1:
            raise StructuralError("the state space is empty")
        if resolution < 2:
            raise InvalidParameterError(f"grid resolution must be >= 2, got {resolution}")
        self.n_states = n_states
        self.resolution = resolution
        self.K = resolution - 1
        counts = np.array(list(compositions(self.K, n_states)), dtype=int)
        if n_states == 1:
            counts = np.ones((1, 1), dtype=int)
        self.points = counts / counts.sum(axis=1, keepdims=True)
        self.points.setflags(write=False)
        # dense lookup from cumulative lattice coordinates to grid index
        self._table = np.full((self.K + 2,) * max(n_states - 1, 1), -1, dtype=int)
        if n_states > 1:
            for idx, c in enumerate(counts):
                self._table[tuple(self._cumulative_counts(c))] = idx

    @staticmethod
    def _cumulative_counts(counts: NDArray[np.int_]) -> NDArray[np.int_]:
        return np.cumsum(counts[::-1])[::-1][1:]

    def __len__(self) -> int:
        return self.points.shape[0]

    def index_of(self, point: ArrayLike) -> int:
        """Grid index of an exact lattice point."""
        p = np.asarray(point, dtype=float)
        counts = np.rint(p * self.K).astype(int)
        if self.n_states == 1:
            return 0
        if np.max(np.abs(counts / self.K - p)) > QUERY_TOL or counts.sum() != self.K:
            raise StructuralError(f"{p.tolist()} is not a point of the grid")
        return int(self._table[tuple(self._cumulative_counts(counts))])

    def locate(self, points: ArrayLike) -> tuple[NDArray[np.int_], NDArray[np.float64]]:
        """Freudenthal simplex vertices and barycentric weights of each query point.

        Returns:
            ``(indices, weights)``, both of shape (N, n_states).

        Raises:
            StructuralError: a query lies outside the probability simplex.
        """
        p = np.atleast_2d(np.asarray(points, dtype=float))
        n, S = p.shape[0], self.n_states
        if p.shape[1] != S:
            raise StructuralError(f"query has {p.shape[1]} coordinates for {S} states")
        if np.any(p < -QUERY_TOL) or np.any(np.abs(p.sum(axis=1) - 1.0) > QUERY_TOL):
            raise StructuralError("interpolation query lies outside the probability simplex")
        if S == 1:
            return np.zeros((n, 1), dtype=int), np.ones((n, 1))
        K = self.K
        y = K * np.cumsum(p[:, ::-1], axis=1)[:, ::-1][:, 1:]
        y = np.minimum.accumulate(np.clip(y, 0.0, K), axis=1)
        base = np.floor(y)
        frac = y - base
        # larger fractions step first; ties keep the lower coordinate first
        order = np.argsort(-frac, axis=1, kind="stable")
        f = np.take_along_axis(frac, order, axis=1)
        weights = np.empty((n, S))
        weights[:, 0] = 1.0 - f[:, 0]
        weights[:, 1:-1] = f[:, :-1] - f[:, 1:]
        weights[:, -1] = f[:, -1]
        verts = np.empty((n, S, S - 1), dtype=int)
        verts[:, 0] = base.astype(int)
        rows = np.arange(n)
        for k in range(1, S):
            verts[:, k] = verts[:, k - 1]
            verts[rows, k, order[:, k - 1]] += 1
        inside = np.all(verts <= K, axis=2)
        safe = np.where(inside[..., None], verts, 0)
        idx = self._table[tuple(safe[..., d] for d in range(S - 1))]
        valid = inside & (idx >= 0)
        if np.any(~valid & (weights > MASS_TOL)):
            raise StructuralError("interpolation query left the triangulated simplex")
        return np.where(valid, idx, 0), np.where(valid, weights, 0.0)

    def interpolate(self, values: ArrayLike, points: ArrayLike) -> NDArray[np.float64] | float:
        """Piecewise-linear value at each query point (scalar for a single 1-d query)."""
        vals = np.asarray(values, dtype=float)
        idx, w = self.locate(points)
        out = (vals[idx] * w).sum(axis=1)
        return float(out[0]) if np.ndim(points) == 1 else out

    def dominant_index(self, point: ArrayLike) -> int:
        """Grid vertex carrying the largest interpolation weight."""
        idx, w = self.locate(point)
        return int(idx[0, int(np.argmax(w[0]))])


# === Games ===


@dataclass(frozen=True, eq=False)
class FiniteMftGame:
    """Finite-state, finite-action mean-field-type game with a common state.

    Callables:
        kernel(t, s, m_s, m_a, a) -> next-state distribution
        payoff(i, t, s, m_s, m_a, a) -> material stage payoff of player i
        terminal(i, s, m_s) -> material terminal payoff of player i

    ``a`` is the joint pure action and ``m_a`` the per-player action marginals;
    ``m_a`` is ``None`` unless ``uses_action_field`` is set, in which case the
    stage tensors are rebuilt for every candidate instead of cached.
    """

    states: tuple[str, ...]
    actions: tuple[tuple[str, ...], ...]
    horizon: int
    kernel: KernelFn
    payoff: PayoffFn
    terminal: TerminalFn
    lam: EmpathyMatrix
    initial: SimplexMeasure
    neighbors: Neighbors | None = None
    uses_action_field: bool = False
    max_states: int = 8
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(tuple(a) for a in self.actions))
        if not self.states or len(self.states) > self.max_states:
            raise StructuralError(f"need 1..{self.max_states} states, got {len(self.states)}")
        if not self.actions or any(not a for a in self.actions):
            raise StructuralError("every player needs a non-empty action set")
        if self.horizon < 1:
            raise InvalidParameterError(f"horizon must be >= 1, got {self.horizon}")
        if self.lam.n != self.n_players:
            raise StructuralError(f"empathy matrix is {self.lam.n}x{self.lam.n} for {self.n_players} players")
        if self.initial.size != self.n_states:
            raise StructuralError(f"initial measure has {self.initial.size} states, expected {self.n_states}")

    @property
    def n_players(self) -> int:
        return len(self.actions)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.actions)

    def stage_tensors(
        self, t: int, m: NDArray[np.float64], m_a: Sequence[NDArray] | None = None
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Empathic payoffs (n, S, *A) and kernel (S, *A, S) at time t and measure m."""
        key = (t, m.tobytes())
        if not self.uses_action_field and key in self._cache:
            return self._cache[key]
        S, shape = self.n_states, self.action_counts
        field_arg = m_a if self.uses_action_field else None
        material = np.zeros((self.n_players, S, *shape))
        kernel = np.zeros((S, *shape, S))
        for s in range(S):
            for a in itertools.product(*(range(k) for k in shape)):
                row = np.asarray(self.kernel(t, s, m, field_arg, a), dtype=float)
                if row.shape != (S,):
                    raise KernelValidityError(f"kernel at t={t}, s={s}, a={a} returned shape {row.shape}")
                kernel[(s, *a)] = row
                for i in range(self.n_players):
                    material[(i, s, *a)] = self.payoff(i, t, s, m, field_arg, a)
        _check_rows(kernel, f"t={t}")
        empathic = np.tensordot(empathy_operator(self.lam, self.neighbors), material, axes=1)
        if not self.uses_action_field:
            self._cache[key] = (empathic, kernel)
        return empathic, kernel

    def terminal_values(self, m: NDArray[np.float64]) -> NDArray[np.float64]:
        """Empathic terminal payoff of every player at every state, shape (n, S)."""
        material = np.array(
            [[self.terminal(i, s, m) for s in range(self.n_states)] for i in range(self.n_players)]
        )
        return empathy_operator(self.lam, self.neighbors) @ material


def tabular_game(
    states: Sequence[str],
    actions: Sequence[Sequence[str]],
    horizon: int,
    rewards: ArrayLike,
    kernels: ArrayLike,
    terminal: ArrayLike,
    lam: EmpathyMatrix,
    initial: ArrayLike,
    mean_field_weight: float = 0.0,
    neighbors: Neighbors | None = None,
) -> FiniteMftGame:
    """Game from tables: rewards (n, S, *A), kernels (S, *A, S), terminal (n, S).

    ``mean_field_weight * m_s[s]`` is added to every stage payoff.
    """
    shape = tuple(len(a) for a in actions)
    n, S = len(actions), len(states)
    r = np.asarray(rewards, dtype=float)
    q = np.asarray(kernels, dtype=float)
    g = np.asarray(terminal, dtype=float)
    if r.shape != (n, S, *shape) or q.shape != (S, *shape, S) or g.shape != (n, S):
        raise StructuralError(
            f"table shapes {r.shape}, {q.shape}, {g.shape} do not match {n} players, {S} states, actions {shape}"
        )
    _check_rows(q, "kernel table")

    def kernel(t, s, m_s, m_a, a):
        return q[(s, *a)]

    def payoff(i, t, s, m_s, m_a, a):
        return float(r[(i, s, *a)] + mean_field_weight * m_s[s])

    def terminal_fn(i, s, m_s):
        return float(g[i, s])

    return FiniteMftGame(
        tuple(states), tuple(tuple(a) for a in actions), horizon, kernel, payoff, terminal_fn,
        lam, SimplexMeasure(np.asarray(initial, dtype=float)), neighbors,
    )


# === Policies ===


def constant_policy(game: FiniteMftGame, grid: SimplexGrid, rules: Sequence[ArrayLike]) -> FeedbackPolicy:
    """Measure-independent policies: ``rules[j]`` is (S, A_j) or (T, S, A_j)."""
    out = []
    for j, rule in enumerate(rules):
        r = np.asarray(rule, dtype=float)
        if r.ndim == 2:
            r = np.broadcast_to(r, (game.horizon, *r.shape))
        if r.shape != (game.horizon, game.n_states, game.action_counts[j]):
            raise StructuralError(f"rule of player {j} has shape {r.shape}")
        out.append(np.array(np.broadcast_to(r[:, None], (game.horizon, len(grid), *r.shape[1:]))))
    return out


def pure_policy(game: FiniteMftGame, grid: SimplexGrid, actions: Sequence[int]) -> FeedbackPolicy:
    """Every player plays one fixed pure action everywhere."""
    rules = []
    for j, a in enumerate(actions):
        rule = np.zeros((game.n_states, game.action_counts[j]))
        rule[:, a] = 1.0
        rules.append(rule)
    return constant_policy(game, grid, rules)


def _marginals(m: NDArray, rules: Sequence[NDArray]) -> list[NDArray]:
    return [m @ r for r in rules]


def _contract(tensor: NDArray, rules: Sequence[NDArray], keep: int | None, n: int) -> NDArray:
    """Average a (S, A_0..A_{n-1}, ...) tensor over every player's mixed rule except ``keep``."""
    out = tensor
    for j in range(n - 1, -1, -1):
        if j == keep:
            continue
        shape = [rules[j].shape[0]] + [1] * (out.ndim - 1)
        shape[1 + j] = rules[j].shape[1]
        out = (out * rules[j].reshape(shape)).sum(axis=1 + j, keepdims=True)
    squeeze = tuple(1 + j for j in range(n) if j != keep)
    return out.squeeze(axis=squeeze) if squeeze else out


def _player_view(
    game: FiniteMftGame, t: int, m: NDArray, rules: Sequence[NDArray], i: int
) -> tuple[NDArray, NDArray]:
    """Player i's empathic payoff (S, A_i) and kernel (S, A_i, S) with the others averaged out."""
    m_a = _marginals(m, rules) if game.uses_action_field else None
    payoff, kernel = game.stage_tensors(t, m, m_a)
    n = game.n_players
    return _contract(payoff[i], rules, i, n), _contract(kernel, rules, i, n)


def _step_values(
    game: FiniteMftGame,
    grid: SimplexGrid,
    t: int,
    m: NDArray,
    rules: Sequence[NDArray],
    player: int,
    candidates: NDArray,
    next_values: NDArray,
) -> NDArray:
    """Stage payoff plus interpolated continuation for each candidate rule (C, S, A_i)."""
    if not game.uses_action_field:
        payoff, kernel = _player_view(game, t, m, rules, player)
        stage = np.einsum("s,csa,sa->c", m, candidates, payoff)
        nxt = np.einsum("s,csa,sap->cp", m, candidates, kernel)
        return stage + grid.interpolate(next_values, nxt)
    out = np.empty(candidates.shape[0])
    for c, cand in enumerate(candidates):
        trial = list(rules)
        trial[player] = cand
        payoff, kernel = _player_view(game, t, m, trial, player)
        stage = np.einsum("s,sa,sa->", m, cand, payoff)
        nxt = np.einsum("s,sa,sap->p", m, cand, kernel)
        out[c] = stage + grid.interpolate(next_values, nxt[None, :])[0]
    return out


def mixed_action_grid(n_actions: int, step: float = ACTION_STEP) -> NDArray[np.float64]:
    """Mixed actions on a lattice of the given step, pure first action first."""
    levels = int(round(1.0 / step))
    return np.array(list(compositions(levels, n_actions)), dtype=float) / levels


def _first_best(values: NDArray) -> int:
    """Index of the first candidate within IMPROVE_TOL of the maximum.

    Candidates are enumerated lexicographically: states in order, and per state
    more weight on lower-indexed actions first. The first tie is therefore the
    lexicographically smallest maximiser.
    """
    return int(np.flatnonzero(values >= values.max() - IMPROVE_TOL)[0])


def _best_rule(
    game: FiniteMftGame,
    grid: SimplexGrid,
    t: int,
    m: NDArray,
    rules: Sequence[NDArray],
    player: int,
    next_values: NDArray,
    step: float,
    max_candidates: int,
    refine: bool,
) -> tuple[float, NDArray]:
    S = game.n_states
    options = mixed_action_grid(game.action_counts[player], step)
    total = options.shape[0] ** S
    if total <= max_candidates:
        combos = np.array(list(itertools.product(range(options.shape[0]), repeat=S)))
        candidates = options[combos]
        values = _step_values(game, grid, t, m, rules, player, candidates, next_values)
        k = _first_best(values)
        best, best_value = candidates[k].copy(), float(values[k])
    else:
        # coordinate ascent over states when the product grid is too large
        best = np.tile(options[0], (S, 1))
        best_value = float(_step_values(game, grid, t, m, rules, player, best[None], next_values)[0])
        for _ in range(10):
            changed = False
            for s in range(S):
                trial = np.repeat(best[None], options.shape[0], axis=0)
                trial[:, s] = options
                values = _step_values(game, grid, t, m, rules, player, trial, next_values)
                k = _first_best(values)
                if values[k] > best_value + IMPROVE_TOL:
                    best, best_value, changed = trial[k].copy(), float(values[k]), True
            if not changed:
                break
    if refine:
        best, best_value = _refine(game, grid, t, m, rules, player, next_values, best, best_value, step)
    return best_value, best


def _refine(game, grid, t, m, rules, player, next_values, best, best_value, step):
    """Shift small masses between action pairs around the incumbent; keep strict improvements."""
    n_actions = game.action_counts[player]
    for _ in range(5):
        trials = []
        for s in range(game.n_states):
            for a, b in itertools.permutations(range(n_actions), 2):
                for delta in (step / 2, step / 4):
                    moved = min(delta, best[s, b])
                    if moved <= 0:
                        continue
                    cand = best.copy()
                    cand[s, a] += moved
                    cand[s, b] -= moved
                    trials.append(cand)
        if not trials:
            break
        trials = np.array(trials)
        values = _step_values(game, grid, t, m, rules, player, trials, next_values)
        k = int(np.argmax(values))
        if values[k] <= best_value + IMPROVE_TOL:
            break
        best, best_value = trials[k], float(values[k])
    return best, best_value


# === Solvers ===


@dataclass(frozen=True)
class DppSolution:
    """Value table (T + 1, G) over the grid and the best-response policy (T, G, S, A_i)."""

    values: NDArray[np.float64]
    policy: NDArray[np.float64]


def _terminal_table(game: FiniteMftGame, grid: SimplexGrid, player: int) -> NDArray:
    return np.array([m @ game.terminal_values(m)[player] for m in grid.points])


def _check_profile(game: FiniteMftGame, grid: SimplexGrid, profile: FeedbackPolicy) -> None:
    if len(profile) != game.n_players:
        raise StructuralError(f"profile has {len(profile)} policies for {game.n_players} players")
    for j, pol in enumerate(profile):
        expected = (game.horizon, len(grid), game.n_states, game.action_counts[j])
        if pol.shape != expected:
            raise StructuralError(f"policy of player {j} has shape {pol.shape}, expected {expected}")


def solve_dpp(
    game: FiniteMftGame,
    others: FeedbackPolicy,
    player: int,
    grid: SimplexGrid,
    step: float = ACTION_STEP,
    max_candidates: int = MAX_CANDIDATES,
    refine: bool = True,
) -> DppSolution:
    """Backward sweep of the measure-valued Bellman recursion for one player.

    ``others`` is a full profile; the entry of ``player`` is ignored. The
    supremum runs over per-state mixed actions on a lattice of width ``step``
    followed by a local refinement; ties keep the lexicographically smallest
    candidate, pure first action first.
    """
    _check_profile(game, grid, others)
    T, G = game.horizon, len(grid)
    values = np.zeros((T + 1, G))
    policy = np.zeros((T, G, game.n_states, game.action_counts[player]))
    values[T] = _terminal_table(game, grid, player)
    for t in range(T - 1, -1, -1):
        for g, m in enumerate(grid.points):
            rules = [pol[t, g] for pol in others]
            values[t, g], policy[t, g] = _best_rule(
                game, grid, t, m, rules, player, values[t + 1], step, max_candidates, refine
            )
        logger.debug(f"player {player}: solved t={t} over {G} grid measures")
    return DppSolution(values, policy)


def evaluate_policy(game: FiniteMftGame, profile: FeedbackPolicy, player: int, grid: SimplexGrid) -> NDArray:
    """Value table (T + 1, G) of ``player`` when everyone follows ``profile``."""
    _check_profile(game, grid, profile)
    T, G = game.horizon, len(grid)
    values = np.zeros((T + 1, G))
    values[T] = _terminal_table(game, grid, player)
    for t in range(T - 1, -1, -1):
        for g, m in enumerate(grid.points):
            rules = [pol[t, g] for pol in profile]
            values[t, g] = _step_values(game, grid, t, m, rules, player, rules[player][None], values[t + 1])[0]
    return values


def measure_flow(game: FiniteMftGame, profile: FeedbackPolicy, grid: SimplexGrid) -> list[SimplexMeasure]:
    """m_0, ..., m_T under the profile; off-grid measures use their dominant grid vertex's rules."""
    _check_profile(game, grid, profile)
    flow = [game.initial]
    m = game.initial.weights
    n = game.n_players
    for t in range(game.horizon):
        g = grid.dominant_index(m)
        rules = [pol[t, g] for pol in profile]
        m_a = _marginals(m, rules) if game.uses_action_field else None
        _, kernel = game.stage_tensors(t, m, m_a)
        step = propagate(m, _contract(kernel, rules, None, n))
        flow.append(step)
        m = step.weights
    return flow


@dataclass(frozen=True)
class EquilibriumReport:
    profile: FeedbackPolicy
    converged: bool
    iterations: int
    gaps: NDArray[np.float64]
    flow: list[SimplexMeasure]
    values: NDArray[np.float64]


def best_response_gaps(
    game: FiniteMftGame, profile: FeedbackPolicy, grid: SimplexGrid, **solver: object
) -> tuple[NDArray, NDArray]:
    """(gap, incumbent value) per player at the initial measure."""
    m0 = game.initial.weights
    gaps, incumbent = np.zeros(game.n_players), np.zeros(game.n_players)
    for i in range(game.n_players):
        best = solve_dpp(game, profile, i, grid, **solver).values[0]
        current = evaluate_policy(game, profile, i, grid)[0]
        incumbent[i] = grid.interpolate(current, m0)
        gaps[i] = max(grid.interpolate(best, m0) - incumbent[i], 0.0)
    return gaps, incumbent


def mean_field_equilibrium(
    game: FiniteMftGame,
    grid: SimplexGrid,
    max_iter: int = 50,
    tol: float = 1e-9,
    initial: FeedbackPolicy | None = None,
    step: float = ACTION_STEP,
    max_candidates: int = MAX_CANDIDATES,
) -> EquilibriumReport:
    """Gauss-Seidel iterated best response until no policy moves by more than ``tol``.

    The reported iteration count excludes the final confirming round. Failure
    to settle is reported (``converged=False``), not raised.
    """
    profile = [p.copy() for p in initial] if initial is not None else pure_policy(game, grid, [0] * game.n_players)
    _check_profile(game, grid, profile)
    solver = {"step": step, "max_candidates": max_candidates}
    converged = False
    rounds = 0
    for rounds in range(1, max_iter + 1):
        change = 0.0
        for i in range(game.n_players):
            response = solve_dpp(game, profile, i, grid, **solver).policy
            change = max(change, float(np.max(np.abs(response - profile[i]))))
            profile[i] = response
        logger.debug(f"best-response round {rounds}: max policy change {change:.3e}")
        if change <= tol:
            converged = True
            break
    iterations = rounds - 1 if converged else rounds
    gaps, values = best_response_gaps(game, profile, grid, **solver)
    if not converged:
        logger.warning(f"best response did not settle after {max_iter} rounds; gaps {gaps.tolist()}")
    else:
        logger.info(f"mean-field equilibrium after {iterations} rounds; gaps {gaps.tolist()}")
    return EquilibriumReport(profile, converged, iterations, gaps, measure_flow(game, profile, grid), values)


@dataclass(frozen=True)
class ResolutionReport:
    fine_resolution: int
    coarse_resolution: int
    max_change: float


def resolution_check(
    game: FiniteMftGame, others: Sequence[ArrayLike], player: int, resolution: int, **solver: object
) -> ResolutionReport:
    """Largest value change at the shared grid measures when the grid is halved.

    ``others`` are measure-independent rules (S, A_j) or (T, S, A_j), so the same
    opponents can be laid on both grids.
    """
    fine = SimplexGrid(game.n_states, resolution)
    if fine.K % 2:
        raise InvalidParameterError(f"resolution - 1 must be even to halve the grid, got {resolution}")
    coarse = SimplexGrid(game.n_states, fine.K // 2 + 1)
    fine_values = solve_dpp(game, constant_policy(game, fine, others), player, fine, **solver).values
    coarse_values = solve_dpp(game, constant_policy(game, coarse, others), player, coarse, **solver).values
    shared = [fine.index_of(p) for p in coarse.points]
    change = float(np.max(np.abs(fine_values[:, shared] - coarse_values)))
    return ResolutionReport(resolution, coarse.resolution, change)


# === Tables ===


def value_table(game: FiniteMftGame, grid: SimplexGrid, values: NDArray) -> pd.DataFrame:
    """Long table keyed by time and grid coordinates."""
    rows = []
    for t in range(values.shape[0]):
        for g, m in enumerate(grid.points):
            row = {"t": t}
            row.update({f"m_{s}": float(w) for s, w in zip(game.states, m)})
            row["value"] = float(values[t, g])
            rows.append(row)
    return pd.DataFrame(rows)


def policy_table(game: FiniteMftGame, grid: SimplexGrid, policy: NDArray, player: int) -> pd.DataFrame:
    """One row per (t, grid measure, state) with the mixed action of ``player``."""
    rows = []
    for t in range(policy.shape[0]):
        for g, m in enumerate(grid.points):
            for s, state in enumerate(game.states):
                row = {"t": t}
                row.update({f"m_{x}": float(w) for x, w in zip(game.states, m)})
                row["state"] = state
                row.update({f"p_{a}": float(p) for a, p in zip(game.actions[player], policy[t, g, s])})
                rows.append(row)
    return pd.DataFrame(rows)


def flow_table(game: FiniteMftGame, flow: Sequence[SimplexMeasure]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"t": t, **{f"m_{s}": float(w) for s, w in zip(game.states, m.weights)}} for t, m in enumerate(flow)]
    )
