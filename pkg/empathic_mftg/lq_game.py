# ------------------------------------------------------------------------------
# FILE: lq_game.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Linear-quadratic mean-field-type variance-reduction game with empathic
# players. The state follows
#
#     s_{t+1} = alpha s_t + alpha_bar E[s_t] + sum_j b_j a_jt + sigma W_t
#
# and player i minimises the empathy-weighted quadratic cost. The backward
# sweep solves the cross-coupled gain systems exactly at each step, after
# which the analytic cost, the mean-state trajectory and a seeded Monte-Carlo
# check are available.
# ------------------------------------------------------------------------------

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from .core import EmpathyMatrix, Neighbors, empathic_transform
from .errors import InvalidParameterError, RiccatiSingularityError

logger = logging.getLogger(__name__)

NoiseLaw = Literal["gaussian", "rademacher", "uniform"]
COND_LIMIT = 1e12
CHUNK_SIZE = 10_000


def _frozen_array(value: ArrayLike, shape: tuple[int, ...], name: str) -> NDArray[np.float64]:
    try:
        arr = np.array(np.broadcast_to(np.asarray(value, dtype=float), shape))
    except ValueError:
        raise InvalidParameterError(f"{name} cannot be broadcast to shape {shape}") from None
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


# === Parameters ===


@dataclass(frozen=True, eq=False)
class LqGameParams:
    """Coefficients of the game; scalars broadcast to per-player (and per-time) arrays.

    ``q``, ``q_bar`` and ``c`` have shape (n, T); ``b``, ``qT`` and ``qT_bar``
    have shape (n,).
    """

    n: int
    T: int
    alpha: float
    alpha_bar: float
    b: NDArray[np.float64]
    sigma: float
    q: NDArray[np.float64]
    q_bar: NDArray[np.float64]
    c: NDArray[np.float64]
    qT: NDArray[np.float64]
    qT_bar: NDArray[np.float64]
    lam: EmpathyMatrix
    neighbors: Neighbors | None = None
    m0: float = 0.0
    var0: float = 0.0
    noise: NoiseLaw = "gaussian"

    def __post_init__(self) -> None:
        if self.n < 1 or self.T < 1:
            raise InvalidParameterError(f"need n >= 1 and T >= 1, got n={self.n}, T={self.T}")
        if self.lam.n != self.n:
            raise InvalidParameterError(f"empathy matrix is {self.lam.n}x{self.lam.n} for {self.n} players")
        if self.var0 < 0:
            raise InvalidParameterError(f"initial variance must be >= 0, got {self.var0}")
        if self.noise not in ("gaussian", "rademacher", "uniform"):
            raise InvalidParameterError(f"unknown noise law {self.noise!r}")
        grid, vec = (self.n, self.T), (self.n,)
        for name, shape in (("b", vec), ("q", grid), ("q_bar", grid), ("c", grid), ("qT", vec), ("qT_bar", vec)):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), shape, name))
        if np.any(self.c <= 0):
            raise InvalidParameterError("control weights c must be > 0")
        if np.any(self.q < 0) or np.any(self.qT < 0):
            raise InvalidParameterError("state weights q and qT must be >= 0")

    def with_empathy(self, lam: EmpathyMatrix) -> LqGameParams:
        fields = {name: getattr(self, name) for name in self.__dataclass_fields__}
        fields["lam"] = lam
        return LqGameParams(**fields)


@dataclass(frozen=True, eq=False)
class EmpathicWeights:
    q: NDArray[np.float64]
    q_bar: NDArray[np.float64]
    qT: NDArray[np.float64]
    qT_bar: NDArray[np.float64]


def empathic_weights(params: LqGameParams) -> EmpathicWeights:
    """q^lambda_j = q_j + sum_{i in N_j, i != j} lambda_ji q_i, per time and for the terminal weights."""

    def transform(w: NDArray[np.float64]) -> NDArray[np.float64]:
        return empathic_transform(w, params.lam, params.neighbors).as_array()

    q = np.column_stack([transform(params.q[:, t]) for t in range(params.T)])
    q_bar = np.column_stack([transform(params.q_bar[:, t]) for t in range(params.T)])
    qT, qT_bar = transform(params.qT), transform(params.qT_bar)
    if np.any(q < 0) or np.any(qT < 0):
        raise InvalidParameterError("empathic state weights q^lambda must be >= 0")
    if np.any(q + q_bar < 0) or np.any(qT + qT_bar < 0):
        raise InvalidParameterError("empathic mean weights q^lambda + q_bar^lambda must be >= 0")
    for arr in (q, q_bar, qT, qT_bar):
        arr.setflags(write=False)
    return EmpathicWeights(q, q_bar, qT, qT_bar)


# === Backward sweep ===


@dataclass(frozen=True, eq=False)
class RiccatiSchedule:
    """Feedback gains (n, T) and value coefficients (n, T + 1)."""

    eta: NDArray[np.float64]
    eta_bar: NDArray[np.float64]
    beta: NDArray[np.float64]
    gamma: NDArray[np.float64]
    weights: EmpathicWeights


def _coupled_gains(
    t: int, b: NDArray, c: NDArray, value_next: NDArray, drift: float, cond_limit: float
) -> tuple[NDArray, NDArray, NDArray]:
    """Solve (c_i + b_i^2 v_i) g_i + b_i v_i sum_{j != i} b_j g_j = -drift b_i v_i for all i.

    Returns the gains, the open-loop drift seen by each player and the pivot.
    """
    pivot = c + b**2 * value_next
    if np.any(pivot <= 0):
        raise RiccatiSingularityError(t, f"c + b^2 v is not positive ({pivot.tolist()})")
    coupling = np.outer(b * value_next, b)
    np.fill_diagonal(coupling, pivot)
    cond = np.linalg.cond(coupling)
    if not np.isfinite(cond) or cond > cond_limit:
        raise RiccatiSingularityError(t, f"condition number {cond:.3e}")
    try:
        gains = np.linalg.solve(coupling, -drift * b * value_next)
    except np.linalg.LinAlgError as exc:
        raise RiccatiSingularityError(t, str(exc)) from exc
    others = drift + (b @ gains) - b * gains
    return gains, others, pivot


def riccati_sweep(params: LqGameParams, cond_limit: float = COND_LIMIT) -> RiccatiSchedule:
    """Backward recursion t = T-1, ..., 0 of the coupled gain and value equations.

    Raises:
        RiccatiSingularityError: the per-step gain system is singular or ill-conditioned.
    """
    w = empathic_weights(params)
    n, T = params.n, params.T
    eta, eta_bar = np.zeros((n, T)), np.zeros((n, T))
    beta, gamma = np.zeros((n, T + 1)), np.zeros((n, T + 1))
    beta[:, T] = w.qT
    gamma[:, T] = w.qT + w.qT_bar
    b = params.b
    for t in range(T - 1, -1, -1):
        c = params.c[:, t]
        eta[:, t], drift, pivot = _coupled_gains(t, b, c, beta[:, t + 1], params.alpha, cond_limit)
        beta[:, t] = w.q[:, t] + beta[:, t + 1] * drift**2 - (b * beta[:, t + 1] * drift) ** 2 / pivot
        eta_bar[:, t], drift_bar, pivot_bar = _coupled_gains(
            t, b, c, gamma[:, t + 1], params.alpha + params.alpha_bar, cond_limit
        )
        gamma[:, t] = (
            w.q[:, t] + w.q_bar[:, t]
            + gamma[:, t + 1] * drift_bar**2
            - (b * gamma[:, t + 1] * drift_bar) ** 2 / pivot_bar
        )
    for arr in (eta, eta_bar, beta, gamma):
        arr.setflags(write=False)
    logger.debug(f"riccati sweep: n={n}, T={T}, gamma_0={gamma[:, 0].tolist()}")
    return RiccatiSchedule(eta, eta_bar, beta, gamma, w)


def analytic_cost(params: LqGameParams, schedule: RiccatiSchedule) -> NDArray[np.float64]:
    """beta_i0 Var[s0] + gamma_i0 E[s0]^2 + sigma^2 sum_t beta_{i,t+1}."""
    return (
        schedule.beta[:, 0] * params.var0
        + schedule.gamma[:, 0] * params.m0**2
        + params.sigma**2 * schedule.beta[:, 1:].sum(axis=1)
    )


def mean_state(params: LqGameParams, schedule: RiccatiSchedule) -> NDArray[np.float64]:
    """E[s_t] for t = 0..T in product form."""
    factors = params.alpha + params.alpha_bar + params.b @ schedule.eta_bar
    return params.m0 * np.concatenate([[1.0], np.cumprod(factors)])


# === Monte-Carlo ===


@dataclass(frozen=True)
class SimulationResult:
    paths: int
    mean_cost: NDArray[np.float64]
    std_error: NDArray[np.float64]
    mean_state: NDArray[np.float64]


def _noise(rng: np.random.Generator, law: NoiseLaw, shape: tuple[int, ...]) -> NDArray[np.float64]:
    """Zero-mean, unit-variance draws."""
    if law == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    if law == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=shape)
    return rng.standard_normal(shape)


def _simulate_chunk(
    params: LqGameParams, schedule: RiccatiSchedule, mean: NDArray, size: int, seq: np.random.SeedSequence
) -> tuple[NDArray, NDArray, NDArray]:
    rng = np.random.default_rng(seq)
    w = schedule.weights
    s = params.m0 + np.sqrt(params.var0) * rng.standard_normal(size)
    cost = np.zeros((params.n, size))
    state_sum = np.zeros(params.T + 1)
    state_sum[0] = s.sum()
    for t in range(params.T):
        # feedback uses the law's mean, not the sample mean
        actions = schedule.eta[:, t, None] * (s - mean[t]) + schedule.eta_bar[:, t, None] * mean[t]
        cost += w.q[:, t, None] * s**2 + w.q_bar[:, t, None] * mean[t] ** 2 + params.c[:, t, None] * actions**2
        shock = params.sigma * _noise(rng, params.noise, (size,))
        s = params.alpha * s + params.alpha_bar * mean[t] + params.b @ actions + shock
        state_sum[t + 1] = s.sum()
    cost += w.qT[:, None] * s**2 + w.qT_bar[:, None] * mean[params.T] ** 2
    return cost.sum(axis=1), (cost**2).sum(axis=1), state_sum


def simulate(
    params: LqGameParams,
    schedule: RiccatiSchedule,
    paths: int,
    seed: int | np.random.SeedSequence,
    chunk_size: int = CHUNK_SIZE,
    max_workers: int | None = None,
) -> SimulationResult:
    """Sample-mean empathic cost of each player under the feedback law.

    Paths are split into fixed chunks with one child seed each, so the result
    does not depend on ``max_workers``.
    """
    if paths < 1:
        raise InvalidParameterError(f"paths must be >= 1, got {paths}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sizes = [min(chunk_size, paths - start) for start in range(0, paths, chunk_size)]
    children = root.spawn(len(sizes))
    mean = mean_state(params, schedule)

    def run(job: tuple[int, np.random.SeedSequence]) -> tuple[NDArray, NDArray, NDArray]:
        return _simulate_chunk(params, schedule, mean, *job)

    jobs = list(zip(sizes, children))
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]

    total = np.sum([p[0] for p in parts], axis=0)
    total_sq = np.sum([p[1] for p in parts], axis=0)
    states = np.sum([p[2] for p in parts], axis=0)
    mean_cost = total / paths
    if paths > 1:
        var = np.maximum(total_sq - paths * mean_cost**2, 0.0) / (paths - 1)
        std_error = np.sqrt(var / paths)
    else:
        std_error = np.full(params.n, np.nan)
    logger.info(f"simulated {paths} paths in {len(sizes)} chunks")
    return SimulationResult(paths, mean_cost, std_error, states / paths)


# === Tables ===


def schedule_table(schedule: RiccatiSchedule) -> pd.DataFrame:
    """One row per (player, t); gains are blank at t = T."""
    n, horizon = schedule.beta.shape
    rows = []
    for i in range(n):
        for t in range(horizon):
            last = t == horizon - 1
            rows.append(
                {
                    "player": i,
                    "t": t,
                    "eta": np.nan if last else schedule.eta[i, t],
                    "eta_bar": np.nan if last else schedule.eta_bar[i, t],
                    "beta": schedule.beta[i, t],
                    "gamma": schedule.gamma[i, t],
                }
            )
    return pd.DataFrame(rows)


def cost_table(analytic: NDArray[np.float64], simulated: SimulationResult | None = None) -> pd.DataFrame:
    table = pd.DataFrame({"player": np.arange(len(analytic)), "analytic": analytic})
    if simulated is not None:
        table["simulated"] = simulated.mean_cost
        table["std_error"] = simulated.std_error
        table["relative_error"] = np.abs(simulated.mean_cost - analytic) / np.abs(analytic)
    return table


def mean_state_table(
    params: LqGameParams, schedule: RiccatiSchedule, simulated: SimulationResult | None = None
) -> pd.DataFrame:
    table = pd.DataFrame({"t": np.arange(params.T + 1), "analytic_mean": mean_state(params, schedule)})
    if simulated is not None:
        table["empirical_mean"] = simulated.mean_state
    return table
