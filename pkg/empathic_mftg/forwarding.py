# ------------------------------------------------------------------------------
# FILE: forwarding.py
# ------------------------------------------------------------------------------
# PURPOSE:
# The n-player crowdforwarding public-good game. A relay network works when at
# least m* devices forward (F); cooperators split the sharing cost m*.alpha
# (success) or m*.gamma (failure) evenly. Material, empathic and reciprocity
# payoffs, unilateral-deviation audits, sustaining ranges for a uniform
# empathy level, a hop-level Monte-Carlo sampler and the embedding into the
# measure-space dynamic program.
# ------------------------------------------------------------------------------

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from .core import (
    BeliefSystem,
    EmpathyMatrix,
    Neighbors,
    NormalFormGame,
    PayoffProfile,
    empathic_transform,
    kindness,
    perceived_kindness,
    reciprocity_payoff as core_reciprocity_payoff,
)
from .errors import InvalidParameterError, StructuralError
from .measure_dp import FiniteMftGame, SimplexMeasure

logger = logging.getLogger(__name__)

PayoffKind = Literal["material", "empathic", "reciprocity"]
PAYOFF_KINDS: tuple[str, ...] = ("material", "empathic", "reciprocity")
ACTIONS = ("nF", "F")
GAIN_TOL = 1e-12
MAX_ENUMERATION = 16


@dataclass(frozen=True, eq=False)
class CrowdForwardParams:
    """Parameters of the crowdforwarding game.

    ``lam`` holds the altruism coefficients used by empathic payoffs and
    ``sensitivity`` the reciprocity sensitivities (zeros when omitted).
    """

    n: int
    m_star: int
    alpha: float
    gamma: float
    p: NDArray[np.float64]
    lam: EmpathyMatrix
    sensitivity: EmpathyMatrix | None = None
    neighbors: Neighbors | None = None

    def __post_init__(self) -> None:
        if self.n < 3:
            raise InvalidParameterError(f"the forwarding game needs n >= 3 players, got {self.n}")
        if not 2 <= self.m_star <= self.n:
            raise InvalidParameterError(f"critical count m* = {self.m_star} is outside [2, {self.n}]")
        if self.alpha <= 0 or self.gamma <= 0:
            raise InvalidParameterError(f"sharing costs must be positive, got alpha={self.alpha}, gamma={self.gamma}")
        p = np.array(self.p, dtype=float)
        if p.shape != (self.n,):
            raise StructuralError(f"expected {self.n} path success probabilities, got shape {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise InvalidParameterError(f"path success probabilities {p.tolist()} are outside [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        sensitivity = self.sensitivity if self.sensitivity is not None else EmpathyMatrix.zeros(self.n)
        object.__setattr__(self, "sensitivity", sensitivity)
        if self.lam.n != self.n or sensitivity.n != self.n:
            raise StructuralError(f"empathy matrices must be {self.n}x{self.n}")

    def with_level(self, level: float, payoff_kind: PayoffKind) -> CrowdForwardParams:
        """Copy with a uniform empathy (or reciprocity sensitivity) level."""
        uniform = EmpathyMatrix.uniform(self.n, level)
        if payoff_kind == "reciprocity":
            return replace(self, sensitivity=uniform)
        return replace(self, lam=uniform)


def parse_profile(profile: Sequence[str | bool | int], n: int) -> tuple[bool, ...]:
    """Normalise a profile to forwarding flags; accepts "F"/"nF", booleans or 0/1."""
    if len(profile) != n:
        raise StructuralError(f"profile has {len(profile)} actions for {n} players")
    flags = []
    for k, a in enumerate(profile):
        if isinstance(a, str):
            if a not in ACTIONS:
                raise StructuralError(f"player {k} plays {a!r}, expected one of {ACTIONS}")
            flags.append(a == "F")
        else:
            flags.append(bool(a))
    return tuple(flags)


def profile_label(flags: Sequence[bool]) -> str:
    return ",".join("F" if f else "nF" for f in flags)


def cost_share(params: CrowdForwardParams, m: int) -> float:
    """Share (m*/m).cost borne by each of m cooperators.

    m >= m* is the success branch (cost alpha). With no cooperators the share is
    what a lone deviator would bear, m*.gamma.
    """
    cost = params.alpha if m >= params.m_star else params.gamma
    return params.m_star / max(m, 1) * cost


# === Payoffs ===


def material_payoff(params: CrowdForwardParams, profile: Sequence[str | bool | int]) -> PayoffProfile:
    flags = np.array(parse_profile(profile, params.n))
    m = int(flags.sum())
    share = cost_share(params, m)
    if m >= params.m_star:
        r = params.p - np.where(flags, share, 0.0)
    else:
        r = np.where(flags, -share, 0.0)
    return PayoffProfile(r)


def empathic_payoff(params: CrowdForwardParams, profile: Sequence[str | bool | int]) -> PayoffProfile:
    """Material payoffs plus the lambda-weighted material payoffs of each player's neighbours."""
    return empathic_transform(material_payoff(params, profile), params.lam, params.neighbors)


def _service_game(share: float) -> NormalFormGame:
    # each player of a pair receives the relaying service of the other
    payoffs = np.zeros((2, 2, 2))
    payoffs[0, :, 1] = share
    payoffs[1, 1, :] = share
    return NormalFormGame((ACTIONS, ACTIONS), payoffs)


def service_kindness(
    params: CrowdForwardParams,
    profile: Sequence[str | bool | int],
    beliefs: Sequence[str | bool | int] | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(kappa, kappa~) over the relaying service at the believed profile.

    The service rendered is the cost share a forwarder bears at the believed
    cooperator count, so kindness is +-(m*/2m).cost.
    """
    flags = parse_profile(profile, params.n)
    believed = parse_profile(beliefs if beliefs is not None else profile, params.n)
    game = _service_game(cost_share(params, sum(believed)))
    n = params.n
    kind = np.zeros((n, n))
    perceived = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pair = [game.pure(0, int(believed[i])), game.pure(1, int(believed[j]))]
            pair_beliefs = BeliefSystem({(0, 1): pair[1], (1, 0): pair[0]}, {(0, 1, 0): pair[0]})
            kind[i, j] = kindness(game, 0, 1, int(flags[i]), pair_beliefs)
            perceived[i, j] = perceived_kindness(game, 0, 1, pair_beliefs)
    return kind, perceived


def reciprocity_payoff(
    params: CrowdForwardParams,
    profile: Sequence[str | bool | int],
    beliefs: Sequence[str | bool | int] | None = None,
) -> PayoffProfile:
    """Material payoff plus sensitivity-weighted kindness times perceived kindness.

    Beliefs default to the profile itself. In a deviation audit they stay at the
    audited profile, so only the deviator's own kindness and material payoff move.
    """
    kind, perceived = service_kindness(params, profile, beliefs)
    return core_reciprocity_payoff(
        material_payoff(params, profile), params.sensitivity, kind, perceived, params.neighbors
    )


def payoffs(
    params: CrowdForwardParams,
    profile: Sequence[str | bool | int],
    payoff_kind: PayoffKind,
    beliefs: Sequence[str | bool | int] | None = None,
) -> NDArray[np.float64]:
    if payoff_kind == "material":
        return material_payoff(params, profile).as_array()
    if payoff_kind == "empathic":
        return empathic_payoff(params, profile).as_array()
    if payoff_kind == "reciprocity":
        return reciprocity_payoff(params, profile, beliefs).as_array()
    raise InvalidParameterError(f"unknown payoff kind {payoff_kind!r}; expected one of {PAYOFF_KINDS}")


# === Audits ===


@dataclass(frozen=True, eq=False)
class DeviationAudit:
    """Unilateral-deviation check of one profile; gains[i] > tol means i wants to switch."""

    profile: tuple[bool, ...]
    payoff_kind: str
    current: NDArray[np.float64]
    deviated: NDArray[np.float64]
    gains: NDArray[np.float64]
    is_equilibrium: bool


def is_equilibrium(
    params: CrowdForwardParams,
    profile: Sequence[str | bool | int],
    payoff_kind: PayoffKind = "material",
    tol: float = GAIN_TOL,
) -> DeviationAudit:
    flags = parse_profile(profile, params.n)
    current = payoffs(params, flags, payoff_kind)
    deviated = np.empty(params.n)
    for i in range(params.n):
        flipped = list(flags)
        flipped[i] = not flipped[i]
        deviated[i] = payoffs(params, flipped, payoff_kind, beliefs=flags)[i]
    gains = deviated - current
    verdict = bool(np.all(gains <= tol))
    logger.debug(f"{payoff_kind} audit of ({profile_label(flags)}): gains {gains.tolist()}")
    return DeviationAudit(flags, payoff_kind, current, deviated, gains, verdict)


def deviation_table(audit: DeviationAudit) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "player": np.arange(len(audit.profile)),
            "action": ["F" if f else "nF" for f in audit.profile],
            "payoff": audit.current,
            "deviation_payoff": audit.deviated,
            "gain": audit.gains,
        }
    )


def all_profiles(n: int) -> list[tuple[bool, ...]]:
    if n > MAX_ENUMERATION:
        raise InvalidParameterError(f"refusing to enumerate 2^{n} profiles (limit n = {MAX_ENUMERATION})")
    return [tuple(bool(b) for b in bits) for bits in itertools.product((False, True), repeat=n)]


def equilibrium_table(params: CrowdForwardParams, payoff_kind: PayoffKind = "material") -> pd.DataFrame:
    """Every pure profile with its cooperator count, payoffs and equilibrium verdict."""
    rows = []
    for flags in all_profiles(params.n):
        audit = is_equilibrium(params, flags, payoff_kind)
        row = {"profile": profile_label(flags), "cooperators": sum(flags)}
        row.update({f"payoff_{i}": float(v) for i, v in enumerate(audit.current)})
        row["max_gain"] = float(audit.gains.max())
        row["equilibrium"] = audit.is_equilibrium
        rows.append(row)
    return pd.DataFrame(rows)


def sustaining_range(
    params: CrowdForwardParams,
    profile: Sequence[str | bool | int],
    payoff_kind: PayoffKind = "empathic",
    tol: float = GAIN_TOL,
) -> tuple[float, float] | None:
    """Uniform levels in [0, 1] at which ``profile`` survives the deviation audit.

    Every deviation gain is affine in the uniform level, so the admissible set is
    an interval; its lower end is the sustaining threshold. ``None`` when empty.
    """
    if payoff_kind == "material":
        raise InvalidParameterError("material payoffs do not depend on an empathy level")
    at_zero = is_equilibrium(params.with_level(0.0, payoff_kind), profile, payoff_kind).gains
    at_one = is_equilibrium(params.with_level(1.0, payoff_kind), profile, payoff_kind).gains
    lower, upper = 0.0, 1.0
    for a, slope in zip(at_zero, at_one - at_zero):
        if abs(slope) <= tol:
            if a > tol:
                return None
        elif slope > 0:
            upper = min(upper, -a / slope)
        else:
            lower = max(lower, -a / slope)
    if lower > upper + tol:
        return None
    upper = max(upper, lower)
    label = profile_label(parse_profile(profile, params.n))
    logger.info(f"{payoff_kind} levels sustaining ({label}): [{lower:.6g}, {upper:.6g}]")
    return lower, upper


# === Channel sampling ===


def path_success_probability(hops: ArrayLike) -> float:
    """Probability that every hop of a multihop path succeeds."""
    h = np.asarray(hops, dtype=float)
    if np.any(h < 0) or np.any(h > 1):
        raise InvalidParameterError(f"hop success probabilities {h.tolist()} are outside [0, 1]")
    return float(np.prod(h))


def sample_material_payoffs(
    params: CrowdForwardParams,
    hops: Sequence[ArrayLike],
    profile: Sequence[str | bool | int],
    samples: int,
    seed: int | np.random.SeedSequence,
) -> NDArray[np.float64]:
    """Monte-Carlo material payoffs, shape (samples, n), from per-hop success draws."""
    if len(hops) != params.n:
        raise StructuralError(f"expected hop lists for {params.n} players, got {len(hops)}")
    flags = np.array(parse_profile(profile, params.n))
    rng = np.random.default_rng(seed)
    delivered = np.empty((samples, params.n))
    for i, path in enumerate(hops):
        probs = np.asarray(path, dtype=float)
        path_success_probability(probs)
        delivered[:, i] = np.all(rng.random((samples, probs.size)) < probs, axis=1)
    m = int(flags.sum())
    share = cost_share(params, m)
    if m >= params.m_star:
        return delivered - np.where(flags, share, 0.0)
    return np.broadcast_to(np.where(flags, -share, 0.0), (samples, params.n)).copy()


def sampled_payoff_table(
    params: CrowdForwardParams,
    hops: Sequence[ArrayLike],
    profile: Sequence[str | bool | int],
    samples: int,
    seed: int | np.random.SeedSequence,
) -> pd.DataFrame:
    """Per-player sample mean and standard error next to the expected material payoff."""
    if samples < 1:
        raise InvalidParameterError(f"samples must be >= 1, got {samples}")
    draws = sample_material_payoffs(params, hops, profile, samples, seed)
    spread = draws.std(axis=0, ddof=1) / np.sqrt(samples) if samples > 1 else np.full(params.n, np.nan)
    return pd.DataFrame(
        {
            "profile": profile_label(parse_profile(profile, params.n)),
            "player": np.arange(params.n),
            "expected": material_payoff(params, profile).as_array(),
            "sample_mean": draws.mean(axis=0),
            "std_error": spread,
        }
    )


# === Embedding ===


def to_finite_game(params: CrowdForwardParams, payoff_kind: PayoffKind = "empathic") -> FiniteMftGame:
    """The one-shot game as a single-state, one-stage measure-space game.

    Reciprocity payoffs depend on beliefs and have no such embedding.
    """
    if payoff_kind == "reciprocity":
        raise InvalidParameterError("reciprocity payoffs depend on beliefs and cannot be embedded")
    table = {flags: material_payoff(params, flags).as_array() for flags in all_profiles(params.n)}

    def kernel(t, s, m_s, m_a, a):
        return np.ones(1)

    def payoff(i, t, s, m_s, m_a, a):
        return float(table[tuple(bool(x) for x in a)][i])

    def terminal(i, s, m_s):
        return 0.0

    lam = params.lam if payoff_kind == "empathic" else EmpathyMatrix.zeros(params.n)
    return FiniteMftGame(
        ("network",), (ACTIONS,) * params.n, 1, kernel, payoff, terminal,
        lam, SimplexMeasure(np.ones(1)), params.neighbors,
    )
