"""Consumer demand equilibrium in an energy market with empathy-altruism.

Consumer i enjoys w_i(d) = theta_i (1 - exp(-d)) and pays the linear price
p(D) = p0 + a (D - S) on her demand. With uniform altruism lambda she maximises
r_i + lambda * sum_{j != i} r_j, whose first-order condition is

    theta_i exp(-d_i) - a (1 - lambda) d_i = p0 - a S + a (1 + lambda) D

(corner d_i = 0 when the left side at 0 does not exceed the right side). For a
fixed aggregate D every d_i(D) is a one-dimensional root; the equilibrium is a
fixed point of D -> sum_i d_i(D), found by damped iteration.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from .core import EmpathyMatrix, empathic_transform
from .errors import ConvergenceError, InvalidParameterError

logger = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-12
RESIDUAL_TOL = 1e-10
MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class MarketModel:
    """n consumers with satisfaction scales ``theta`` facing p(D) = p0 + slope (D - supply)."""

    theta: NDArray[np.float64]
    p0: float
    slope: float
    supply: float = 0.0

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 1 or theta.size == 0:
            raise InvalidParameterError("theta must be a non-empty vector")
        if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
            raise InvalidParameterError("satisfaction scales theta must be finite and > 0")
        if self.slope < 0:
            raise InvalidParameterError(f"price slope must be >= 0, got {self.slope}")
        if self.p0 < 0 or self.supply < 0:
            raise InvalidParameterError("p0 and supply must be >= 0")
        if self.slope == 0 and self.p0 == 0:
            raise InvalidParameterError("a free, flat price makes demand unbounded")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def symmetric(cls, n: int, p0: float, slope: float, supply: float = 0.0, theta: float = 1.0) -> MarketModel:
        return cls(np.full(n, float(theta)), p0, slope, supply)

    @property
    def n(self) -> int:
        return self.theta.size

    def price(self, aggregate: float) -> float:
        return self.p0 + self.slope * (aggregate - self.supply)

    def scaled(self, factor: float) -> MarketModel:
        """The same market with every satisfaction scale multiplied by ``factor``."""
        return MarketModel(self.theta * factor, self.p0, self.slope, self.supply)


@dataclass(frozen=True)
class EquilibriumResult:
    lam: float
    demand: NDArray[np.float64]
    aggregate: float
    price: float
    residual: float
    iterations: int


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam < 1.0:
        raise InvalidParameterError(f"altruism lambda={lam} is outside [0, 1)")


def empathic_payoffs(model: MarketModel, lam: float, d: ArrayLike) -> NDArray[np.float64]:
    """Empathic payoffs r_i + lambda * sum_{j != i} r_j at demand profile ``d``."""
    demand = np.asarray(d, dtype=float)
    material = model.theta * -np.expm1(-demand) - model.price(demand.sum()) * demand
    return empathic_transform(material, EmpathyMatrix.uniform(model.n, lam)).as_array()


def foc_residuals(model: MarketModel, lam: float, d: ArrayLike) -> NDArray[np.float64]:
    """Partial derivative of each consumer's empathic payoff in her own demand."""
    demand = np.asarray(d, dtype=float)
    total = demand.sum()
    a = model.slope
    return (
        model.theta * np.exp(-demand)
        - a * (1.0 - lam) * demand
        - (model.p0 - a * model.supply + a * (1.0 + lam) * total)
    )


def kkt_residual(model: MarketModel, lam: float, d: ArrayLike) -> float:
    """Largest violation of the first-order conditions with the d >= 0 corner."""
    demand = np.asarray(d, dtype=float)
    g = foc_residuals(model, lam, demand)
    interior = demand > 0
    viol = np.where(interior, np.abs(g), np.maximum(g, 0.0))
    return float(viol.max())


def _best_demand(theta: float, a: float, lam: float, rhs: float) -> float:
    if theta <= rhs:
        return 0.0

    def g(x: float) -> float:
        return theta * math.exp(-x) - a * (1.0 - lam) * x - rhs

    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("individual demand is unbounded", g(hi), 0)
    return optimize.brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def demand_response(model: MarketModel, lam: float, aggregate: float) -> NDArray[np.float64]:
    """Every consumer's optimal demand when the aggregate is held at ``aggregate``."""
    a = model.slope
    rhs = model.p0 - a * model.supply + a * (1.0 + lam) * aggregate
    return np.array([_best_demand(float(t), a, lam, rhs) for t in model.theta])


def demand_equilibrium(
    model: MarketModel,
    lam: float,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = MAX_ITER,
    residual_tol: float = RESIDUAL_TOL,
) -> EquilibriumResult:
    """Demand profile at which every empathic first-order condition holds.

    Damping starts at 0.5 and halves whenever the fixed-point residual grows.

    Raises:
        ConvergenceError: iteration cap reached, or final KKT residual above ``residual_tol``.
    """
    _check_lambda(lam)
    aggregate = 0.0
    omega = 0.5
    previous = math.inf
    for iteration in range(1, max_iter + 1):
        step = demand_response(model, lam, aggregate).sum() - aggregate
        if abs(step) < tol:
            break
        if abs(step) > previous:
            omega *= 0.5
        previous = abs(step)
        aggregate = max(aggregate + omega * step, 0.0)
        logger.debug(f"lambda={lam} iter={iteration} D={aggregate:.15g} step={step:.3e} omega={omega}")
    else:
        raise ConvergenceError("aggregate demand iteration did not settle", abs(step), max_iter)

    demand = demand_response(model, lam, aggregate)
    residual = kkt_residual(model, lam, demand)
    if residual > residual_tol:
        raise ConvergenceError("first-order conditions not met", residual, iteration)
    total = float(demand.sum())
    demand.setflags(write=False)
    logger.debug(f"lambda={lam}: D*={total:.12g} after {iteration} iterations (residual {residual:.1e})")
    return EquilibriumResult(lam, demand, total, model.price(total), residual, iteration)


def two_peak_day(
    hours: int = 24, base: float = 0.6, morning: float = 0.8, evening: float = 1.2
) -> NDArray[np.float64]:
    """Hourly satisfaction multipliers with a morning (08:00) and an evening (19:00) peak."""
    t = np.arange(hours, dtype=float) * 24.0 / hours
    return (
        base
        + morning * np.exp(-0.5 * ((t - 8.0) / 1.5) ** 2)
        + evening * np.exp(-0.5 * ((t - 19.0) / 2.0) ** 2)
    )


def peak_comparison(
    model: MarketModel,
    demand_day: Sequence[float],
    lambdas: Sequence[float],
    max_workers: int | None = None,
) -> pd.DataFrame:
    """Equilibrium aggregate demand per hour (rows) and lambda (columns).

    Hour t uses ``model`` with its satisfaction scales multiplied by
    ``demand_day[t]``. Hours are independent and may be solved on a thread pool.
    """
    jobs = [(hour, float(lam)) for lam in lambdas for hour in range(len(demand_day))]

    def solve(job: tuple[int, float]) -> float:
        hour, lam = job
        return demand_equilibrium(model.scaled(float(demand_day[hour])), lam).aggregate

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(solve, jobs))
    else:
        values = [solve(job) for job in jobs]

    table = pd.DataFrame(
        np.array(values).reshape(len(lambdas), len(demand_day)).T,
        index=pd.RangeIndex(len(demand_day), name="hour"),
        columns=[float(lam) for lam in lambdas],
    )
    logger.info(f"peak comparison: {len(demand_day)} hours x {len(lambdas)} lambdas")
    return table


def peak_summary(table: pd.DataFrame) -> pd.DataFrame:
    """Peak hour and peak aggregate demand for every lambda column."""
    return pd.DataFrame(
        {
            "lambda": [float(c) for c in table.columns],
            "peak_demand": table.max(axis=0).to_numpy(),
            "peak_hour": table.idxmax(axis=0).to_numpy(),
        }
    )
