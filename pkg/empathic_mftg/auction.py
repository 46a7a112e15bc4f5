"""Optimal bidding price of spiteful and altruistic prosumers.

A prosumer with production cost ``c`` bids the conditional expectation of the
tilted rival cost X_lambda above ``c``. The integral is taken over the
survival function (1 - F)^(1 + lambda), which stays bounded for every admissible
lambda, so the quadrature never meets the density's endpoint singularity.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import integrate

from .errors import DegenerateConditioningError, InvalidParameterError, StructuralError

logger = logging.getLogger(__name__)

DENSITY_STEP = 1e-6
QUAD_EPSABS = 1e-10
TAIL_FLOOR = 1e-14
CDF_TOL = 1e-9


@dataclass(frozen=True)
class CostDistribution:
    """Rival production cost on [0, upper] given by its cdf (and optionally its density)."""

    name: str
    upper: float
    cdf: Callable[[float], float]
    density: Callable[[float], float] | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.upper) and self.upper > 0):
            raise InvalidParameterError(f"support upper bound must be > 0, got {self.upper}")
        lo, hi = float(self.cdf(0.0)), float(self.cdf(self.upper))
        if abs(lo) > CDF_TOL or abs(hi - 1.0) > CDF_TOL:
            raise InvalidParameterError(
                f"{self.name}: cdf must satisfy F(0)=0 and F({self.upper})=1, got {lo} and {hi}"
            )

    def pdf(self, x: float) -> float:
        """Density, by central differences when none was supplied."""
        if self.density is not None:
            return float(self.density(x))
        a = max(0.0, x - DENSITY_STEP)
        b = min(self.upper, x + DENSITY_STEP)
        return (float(self.cdf(b)) - float(self.cdf(a))) / (b - a)

    @classmethod
    def uniform(cls, upper: float = 1.0) -> CostDistribution:
        return cls(
            "uniform",
            upper,
            lambda x: min(max(x / upper, 0.0), 1.0),
            lambda x: 1.0 / upper if 0.0 <= x <= upper else 0.0,
        )

    @classmethod
    def truncated_exponential(cls, rate: float, upper: float) -> CostDistribution:
        if not rate > 0:
            raise InvalidParameterError(f"exponential rate must be > 0, got {rate}")
        norm = -math.expm1(-rate * upper)
        return cls(
            "truncated_exponential",
            upper,
            lambda x: min(max(-math.expm1(-rate * x) / norm, 0.0), 1.0),
            lambda x: rate * math.exp(-rate * x) / norm if 0.0 <= x <= upper else 0.0,
        )

    @classmethod
    def piecewise_linear(cls, xs: Sequence[float], fs: Sequence[float]) -> CostDistribution:
        """Linear interpolation of cdf knots; the first knot must be (0, 0) and the last F = 1."""
        x = np.asarray(xs, dtype=float)
        f = np.asarray(fs, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or x.size < 2:
            raise StructuralError("piecewise-linear cdf needs two equal-length knot vectors (>= 2 knots)")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise InvalidParameterError("cdf knots must start at 0 and be strictly increasing")
        if np.any(np.diff(f) < 0):
            raise InvalidParameterError("cdf values must be non-decreasing")
        return cls("piecewise_linear", float(x[-1]), lambda c: float(np.interp(c, x, f)))

    @classmethod
    def from_csv(cls, path: str | Path) -> CostDistribution:
        """Piecewise-linear cdf from a two-column (cost, cdf) CSV file."""
        frame = pd.read_csv(path)
        if frame.shape[1] != 2:
            raise StructuralError(f"{path}: expected two columns (cost, cdf), got {frame.shape[1]}")
        return cls.piecewise_linear(frame.iloc[:, 0].to_numpy(), frame.iloc[:, 1].to_numpy())


@dataclass(frozen=True)
class BidQuery:
    """One bidding problem.

    Args:
        c: Own production cost in [0, upper].
        lam: Spite coefficient; pass -lambda for a partially altruistic prosumer.
        distribution: Rival cost law.
        entry_cost: Entry fee; does not move the optimal price.
        quantity: Offered quantity; does not move the optimal price.
    """

    c: float
    lam: float
    distribution: CostDistribution
    entry_cost: float = 0.0
    quantity: float = 1.0

    def __post_init__(self) -> None:
        _check_exponent(self.lam)
        if not 0.0 <= self.c <= self.distribution.upper:
            raise InvalidParameterError(
                f"cost {self.c} is outside the support [0, {self.distribution.upper}]"
            )


def _check_exponent(lam: float) -> None:
    if not 1.0 + lam > 0.0:
        raise InvalidParameterError(f"1 + lambda must be > 0, got lambda={lam}")


def survival(d: CostDistribution, lam: float, c: float) -> float:
    return (1.0 - float(d.cdf(c))) ** (1.0 + lam)


def tilted_cdf(d: CostDistribution, lam: float, c: float) -> float:
    """I_lambda(c) = 1 - (1 - F(c))^(1 + lambda)."""
    _check_exponent(lam)
    if not 0.0 <= c <= d.upper:
        raise InvalidParameterError(f"cost {c} is outside the support [0, {d.upper}]")
    return 1.0 - survival(d, lam, c)


def bid_price(q: BidQuery, epsabs: float = QUAD_EPSABS) -> float:
    """p* = E[X_lambda | X_lambda > c] = c + int_c^upper S(x) dx / S(c).

    Raises:
        DegenerateConditioningError: when the conditioning mass S(c) is below 1e-14.
    """
    d = q.distribution
    tail = survival(d, q.lam, q.c)
    if tail < TAIL_FLOOR:
        raise DegenerateConditioningError(
            f"P(X_lambda > {q.c}) = {tail:.3e} is too small to condition on (lambda={q.lam})"
        )
    # tolerance is taken relative to the conditioning mass
    area, err = integrate.quad(
        lambda x: survival(d, q.lam, x), q.c, d.upper, epsabs=epsabs * tail, epsrel=1e-12, limit=200
    )
    price = q.c + area / tail
    logger.debug(f"bid_price c={q.c} lambda={q.lam}: {price:.12g} (quad err {err:.1e})")
    return min(max(price, q.c), d.upper)


def uniform_bid_closed_form(c: float, lam: float, upper: float = 1.0) -> float:
    """Closed form for a uniform rival cost on [0, upper]."""
    _check_exponent(lam)
    return c + (upper - c) / (2.0 + lam)


def benefit(q: BidQuery) -> float:
    """Markup p* - c."""
    return bid_price(q) - q.c


def bid_curve(d: CostDistribution, lambdas: Sequence[float], costs: Sequence[float]) -> pd.DataFrame:
    """Prices on a cost x lambda grid (index: cost, one column per lambda)."""
    for lam in lambdas:
        _check_exponent(lam)
    table = pd.DataFrame(
        [[bid_price(BidQuery(float(c), float(lam), d)) for lam in lambdas] for c in costs],
        index=pd.Index([float(c) for c in costs], name="cost"),
        columns=[float(lam) for lam in lambdas],
    )
    logger.info(f"bid curve: {len(costs)} costs x {len(lambdas)} lambdas ({d.name})")
    return table
