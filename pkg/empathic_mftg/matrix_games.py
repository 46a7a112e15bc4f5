# ------------------------------------------------------------------------------
# FILE: matrix_games.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Two-player matrix games built from random channel indicators: expectation
# games, weak/strict pure Nash enumeration, the closed-form 2x2 mixed solver
# with degenerate families, a brute-force grid audit, the collision-channel and
# forwarding-dilemma instances, empathy-band outcome classification and the
# selfish / perspective-taking type interaction.
# ------------------------------------------------------------------------------

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from .core import EmpathyMatrix, empathic_transform
from .errors import DegenerateConditioningError, InvalidParameterError, StructuralError

logger = logging.getLogger(__name__)

AUDIT_EPS = 1e-9
TIE_ATOL = 1e-12

Profile = tuple[str, str]


def _check_probability(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise InvalidParameterError(f"{name}={value} is not a probability in [0, 1]")
    return float(value)


# === Games ===


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    """Row player 1 against column player 2."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    payoff1: NDArray[np.float64]
    payoff2: NDArray[np.float64]

    def __post_init__(self) -> None:
        rows, cols = tuple(self.rows), tuple(self.cols)
        if not rows or not cols:
            raise StructuralError("a bimatrix game needs at least one row and one column")
        a = np.array(self.payoff1, dtype=float)
        b = np.array(self.payoff2, dtype=float)
        if a.shape != (len(rows), len(cols)) or b.shape != a.shape:
            raise StructuralError(
                f"payoff shapes {a.shape} / {b.shape} do not match {len(rows)}x{len(cols)} actions"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidParameterError("bimatrix payoffs must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "payoff1", a)
        object.__setattr__(self, "payoff2", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.payoff1.shape

    def cell(self, row: str, col: str) -> tuple[float, float]:
        r, c = self.rows.index(row), self.cols.index(col)
        return float(self.payoff1[r, c]), float(self.payoff2[r, c])

    def expected(self, x: ArrayLike, y: ArrayLike) -> tuple[float, float]:
        """Expected payoffs when player 1 mixes ``x`` and player 2 mixes ``y``."""
        xv, yv = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return float(xv @ self.payoff1 @ yv), float(xv @ self.payoff2 @ yv)

    def to_table(self) -> pd.DataFrame:
        rows = [
            {"row": r, "col": c, "payoff1": self.payoff1[i, j], "payoff2": self.payoff2[i, j]}
            for i, r in enumerate(self.rows)
            for j, c in enumerate(self.cols)
        ]
        return pd.DataFrame(rows)


@dataclass(frozen=True)
class IndicatorTerm:
    """``weight`` times the product of the named success indicators."""

    weight: float
    events: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class RandomMatrixGame:
    """A bimatrix game whose cells are sums of indicator terms minus deterministic costs.

    Events are independent; an event named in several cells is drawn once per
    realisation, so correlated entries stay correlated under :meth:`sample`.
    """

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    events: Mapping[str, float]
    cells1: Mapping[tuple[int, int], tuple[IndicatorTerm, ...]] = field(default_factory=dict)
    cells2: Mapping[tuple[int, int], tuple[IndicatorTerm, ...]] = field(default_factory=dict)
    cost1: NDArray[np.float64] | None = None
    cost2: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        events = {name: _check_probability(p, f"P({name})") for name, p in self.events.items()}
        shape = (len(self.rows), len(self.cols))
        for cells in (self.cells1, self.cells2):
            for (r, c), terms in cells.items():
                if not (0 <= r < shape[0] and 0 <= c < shape[1]):
                    raise StructuralError(f"cell ({r}, {c}) is outside the {shape} game")
                for term in terms:
                    unknown = set(term.events) - events.keys()
                    if unknown:
                        raise StructuralError(f"indicator terms use undeclared events {sorted(unknown)}")
        costs = []
        for cost in (self.cost1, self.cost2):
            arr = np.zeros(shape) if cost is None else np.array(cost, dtype=float)
            if arr.shape != shape:
                raise StructuralError(f"cost matrix shape {arr.shape} does not match {shape}")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise InvalidParameterError("deterministic costs must be finite and >= 0")
            arr.setflags(write=False)
            costs.append(arr)
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(self.cols))
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "cost1", costs[0])
        object.__setattr__(self, "cost2", costs[1])

    def _evaluate(self, indicator: Mapping[str, float]) -> BimatrixGame:
        shape = (len(self.rows), len(self.cols))
        mats = []
        for cells, cost in ((self.cells1, self.cost1), (self.cells2, self.cost2)):
            mat = -np.asarray(cost, dtype=float)
            for (r, c), terms in cells.items():
                mat[r, c] += sum(t.weight * math.prod(indicator[e] for e in t.events) for t in terms)
            mats.append(mat.reshape(shape))
        return BimatrixGame(self.rows, self.cols, mats[0], mats[1])

    def expected_game(self) -> BimatrixGame:
        return self._evaluate(self.events)

    def sample(self, rng: np.random.Generator) -> BimatrixGame:
        """One channel realisation: every event is drawn once."""
        names = sorted(self.events)
        draws = rng.random(len(names))
        indicator = {name: float(u < self.events[name]) for name, u in zip(names, draws)}
        return self._evaluate(indicator)


def expected_game(rmg: RandomMatrixGame) -> BimatrixGame:
    """Replace every random entry by its expectation."""
    return rmg.expected_game()


def collision_random_game(p1: float, p2: float, lam1: float = 0.0, lam2: float = 0.0) -> RandomMatrixGame:
    """Collision channel: transmit (T) or wait (W); simultaneous transmissions collide.

    Player i succeeds alone with probability ``p_i`` and an empathic partner j
    values that success with weight ``lam_j``.
    """
    _check_probability(p1, "p1")
    _check_probability(p2, "p2")
    return RandomMatrixGame(
        rows=("T", "W"),
        cols=("T", "W"),
        events={"snr1": p1, "snr2": p2},
        cells1={(0, 1): (IndicatorTerm(1.0, ("snr1",)),), (1, 0): (IndicatorTerm(lam1, ("snr2",)),)},
        cells2={(0, 1): (IndicatorTerm(lam2, ("snr1",)),), (1, 0): (IndicatorTerm(1.0, ("snr2",)),)},
    )


FORWARDING_LINKS = ("S1S2", "S2D1", "S2S1", "S1D2")


def forwarding_random_game(links: Mapping[str, float], c1: float, c2: float) -> RandomMatrixGame:
    """Two-relay forwarding dilemma over four SINR links.

    Player 1's traffic reaches D1 when S1->S2 and S2->D1 both succeed; player 2's
    reaches D2 over S2->S1 and S1->D2.

    A relay's own delivery depends only on the other relay forwarding, so the
    expected game always has m11 == m21 (and n11 == n12). Games with distinct
    rewards are built directly from :class:`ForwardingParams`.
    """
    missing = [name for name in FORWARDING_LINKS if name not in links]
    if missing:
        raise StructuralError(f"missing link probabilities {missing}")
    own1 = (IndicatorTerm(1.0, ("S1S2", "S2D1")),)
    own2 = (IndicatorTerm(1.0, ("S2S1", "S1D2")),)
    return RandomMatrixGame(
        rows=("F", "nF"),
        cols=("F", "nF"),
        events={name: links[name] for name in FORWARDING_LINKS},
        cells1={(0, 0): own1, (1, 0): own1},
        cells2={(0, 0): own2, (0, 1): own2},
        cost1=np.array([[c1, c1], [0.0, 0.0]]),
        cost2=np.array([[c2, 0.0], [c2, 0.0]]),
    )


# === Equilibria ===


@dataclass(frozen=True)
class MixedProfile:
    x: tuple[float, ...]
    y: tuple[float, ...]


@dataclass(frozen=True)
class EquilibriumFamily:
    """A continuum: one player fixed on a pure action, the other's first-action weight in [low, high]."""

    fixed_player: int
    fixed_action: str
    low: float
    high: float


@dataclass(frozen=True)
class EquilibriumSet:
    pure: tuple[Profile, ...] = ()
    mixed: tuple[MixedProfile, ...] = ()
    families: tuple[EquilibriumFamily, ...] = ()
    degenerate: bool = False


def pure_nash(g: BimatrixGame, strict: bool = False, atol: float = TIE_ATOL) -> list[Profile]:
    """Cells where no player gains by a unilateral deviation.

    Weak (tie-inclusive) by default; ``strict`` requires every deviation to lose.
    """
    a, b = g.payoff1, g.payoff2
    out: list[Profile] = []
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            dev1 = np.delete(a[:, c], r) - a[r, c]
            dev2 = np.delete(b[r, :], c) - b[r, c]
            if strict:
                ok = np.all(dev1 < -atol) and np.all(dev2 < -atol)
            else:
                ok = np.all(dev1 <= atol) and np.all(dev2 <= atol)
            if ok:
                out.append((g.rows[r], g.cols[c]))
    return out


def best_response_regret(g: BimatrixGame, x: ArrayLike, y: ArrayLike) -> tuple[float, float]:
    xv, yv = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    u1, u2 = g.expected(xv, yv)
    return float(np.max(g.payoff1 @ yv) - u1), float(np.max(xv @ g.payoff2) - u2)


def audit_profile(g: BimatrixGame, x: ArrayLike, y: ArrayLike, eps: float = AUDIT_EPS) -> bool:
    """Independent epsilon-best-response check of a mixed profile."""
    regret1, regret2 = best_response_regret(g, x, y)
    return regret1 <= eps and regret2 <= eps


def _unit(n: int, k: int) -> NDArray[np.float64]:
    vec = np.zeros(n)
    vec[k] = 1.0
    return vec


def _support_interval(d0: float, d1: float, atol: float) -> tuple[float, float] | None:
    """{w in [0,1] : d1 + w (d0 - d1) >= -atol} as a closed interval, or None."""
    slope = d0 - d1
    if abs(slope) <= atol:
        return (0.0, 1.0) if d1 >= -atol else None
    root = -d1 / slope
    lo, hi = (max(0.0, root), 1.0) if slope > 0 else (0.0, min(1.0, root))
    return (lo, hi) if lo <= hi + atol else None


def mixed_nash_2x2(g: BimatrixGame, eps: float = AUDIT_EPS, atol: float = TIE_ATOL) -> EquilibriumSet:
    """Full equilibrium set of a 2x2 game.

    Pure equilibria come from :func:`pure_nash`; the interior point comes from
    the two indifference conditions when it lies strictly inside the square.
    Whenever a player is indifferent against a pure action of the other, the
    resulting continuum is reported as an :class:`EquilibriumFamily` and the
    set is flagged degenerate. Every profile is audited before it is returned.
    """
    if g.shape != (2, 2):
        raise StructuralError(f"mixed_nash_2x2 needs a 2x2 game, got {g.shape}")
    a, b = g.payoff1, g.payoff2
    degenerate = False

    pure = []
    for row, col in pure_nash(g, atol=atol):
        x, y = _unit(2, g.rows.index(row)), _unit(2, g.cols.index(col))
        if audit_profile(g, x, y, eps):
            pure.append((row, col))
        else:
            logger.warning(f"pure profile ({row}, {col}) failed the best-response audit")

    mixed: list[MixedProfile] = []
    den_x = b[0, 0] - b[1, 0] - b[0, 1] + b[1, 1]
    den_y = a[0, 0] - a[0, 1] - a[1, 0] + a[1, 1]
    num_x = b[1, 1] - b[1, 0]
    num_y = a[1, 1] - a[0, 1]
    if (abs(den_x) <= atol and abs(num_x) <= atol) or (abs(den_y) <= atol and abs(num_y) <= atol):
        degenerate = True
    if abs(den_x) > atol and abs(den_y) > atol:
        x0, y0 = num_x / den_x, num_y / den_y
        if atol < x0 < 1 - atol and atol < y0 < 1 - atol:
            x, y = (x0, 1.0 - x0), (y0, 1.0 - y0)
            if audit_profile(g, x, y, eps):
                mixed.append(MixedProfile(x, y))
            else:
                logger.warning(f"interior profile x={x0:.6g}, y={y0:.6g} failed the best-response audit")

    families: list[EquilibriumFamily] = []
    for r in range(2):
        if abs(b[r, 0] - b[r, 1]) <= atol:
            span = _support_interval(a[r, 0] - a[1 - r, 0], a[r, 1] - a[1 - r, 1], atol)
            if span and span[1] - span[0] > atol:
                families.append(EquilibriumFamily(1, g.rows[r], *span))
    for c in range(2):
        if abs(a[0, c] - a[1, c]) <= atol:
            span = _support_interval(b[0, c] - b[0, 1 - c], b[1, c] - b[1, 1 - c], atol)
            if span and span[1] - span[0] > atol:
                families.append(EquilibriumFamily(2, g.cols[c], *span))
    if families:
        degenerate = True

    return EquilibriumSet(tuple(pure), tuple(mixed), tuple(families), degenerate)


def grid_audit(g: BimatrixGame, step: float = 1e-3, eps: float = AUDIT_EPS) -> NDArray[np.float64]:
    """Brute-force scan of the mixed-strategy grid of a 2x2 game.

    Returns:
        An array of ``(x, y)`` first-action weights whose profiles are
        eps-equilibria.
    """
    if g.shape != (2, 2):
        raise StructuralError(f"grid_audit needs a 2x2 game, got {g.shape}")
    w = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    ys = np.vstack([w, 1.0 - w])  # (2, N)
    a_y = g.payoff1 @ ys  # row payoffs per y
    u1 = np.outer(w, a_y[0]) + np.outer(1.0 - w, a_y[1])
    regret1 = a_y.max(axis=0)[None, :] - u1
    x_b = np.vstack([w, 1.0 - w]).T @ g.payoff2  # column payoffs per x
    u2 = np.outer(x_b[:, 0], w) + np.outer(x_b[:, 1], 1.0 - w)
    regret2 = x_b.max(axis=1)[:, None] - u2
    ix, iy = np.nonzero((regret1 <= eps) & (regret2 <= eps))
    return np.column_stack([w[ix], w[iy]])


def equilibria_table(eqset: EquilibriumSet, g: BimatrixGame) -> pd.DataFrame:
    """One row per equilibrium: profile, payoff1, payoff2, type.

    Families are evaluated at the midpoint of their interval.
    """
    rows = []
    for row, col in eqset.pure:
        u1, u2 = g.cell(row, col)
        rows.append({"profile": f"{row},{col}", "payoff1": u1, "payoff2": u2, "type": "pure"})
    for prof in eqset.mixed:
        u1, u2 = g.expected(prof.x, prof.y)
        label = f"x={prof.x[0]:.12g};y={prof.y[0]:.12g}"
        rows.append({"profile": label, "payoff1": u1, "payoff2": u2, "type": "mixed"})
    for fam in eqset.families:
        mid = 0.5 * (fam.low + fam.high)
        free = (mid, 1.0 - mid)
        if fam.fixed_player == 1:
            x, y = _unit(2, g.rows.index(fam.fixed_action)), free
            label = f"{fam.fixed_action};y in [{fam.low:.12g},{fam.high:.12g}]"
        else:
            x, y = free, _unit(2, g.cols.index(fam.fixed_action))
            label = f"x in [{fam.low:.12g},{fam.high:.12g}];{fam.fixed_action}"
        u1, u2 = g.expected(x, y)
        rows.append({"profile": label, "payoff1": u1, "payoff2": u2, "type": "family"})
    return pd.DataFrame(rows, columns=["profile", "payoff1", "payoff2", "type"])


# === Collision channel ===


def collision_game(p1: float, p2: float, lam1: float, lam2: float) -> BimatrixGame:
    return expected_game(collision_random_game(p1, p2, lam1, lam2))


def collision_gap(p1: float, p2: float, lam1: float, lam2: float) -> float:
    """Equilibrium payoff gap max{(1 - lam_j) p_i} of the empathic collision game."""
    _check_probability(p1, "p1")
    _check_probability(p2, "p2")
    for name, lam in (("lambda1", lam1), ("lambda2", lam2)):
        if not 0.0 <= lam <= 1.0:
            raise InvalidParameterError(f"{name}={lam} is outside [0, 1]")
    return max((1.0 - lam2) * p1, (1.0 - lam1) * p2)


def collision_curve(p1: float, p2: float, lambdas: Sequence[float]) -> pd.DataFrame:
    """Gap and (T,T)-equilibrium flag along a symmetric empathy grid."""
    rows = []
    for lam in lambdas:
        eq = pure_nash(collision_game(p1, p2, lam, lam))
        rows.append(
            {
                "lambda": float(lam),
                "gap": collision_gap(p1, p2, lam, lam),
                "tt_equilibrium": ("T", "T") in eq,
                "pure_equilibria": ";".join(f"{r}{c}" for r, c in eq),
            }
        )
    return pd.DataFrame(rows, columns=["lambda", "gap", "tt_equilibrium", "pure_equilibria"])


# === Forwarding dilemma ===


@dataclass(frozen=True)
class ForwardingParams:
    """Expected link-success products, forwarding costs and empathy of the two relays."""

    m11: float
    m21: float
    n11: float
    n12: float
    c1: float
    c2: float
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("m11", "m21", "n11", "n12"):
            _check_probability(getattr(self, name), name)
        for name in ("c1", "c2", "lambda1", "lambda2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.c1 < 0 or self.c2 < 0:
            raise InvalidParameterError(f"forwarding costs must be >= 0, got c1={self.c1}, c2={self.c2}")

    def with_empathy(self, lambda1: float, lambda2: float) -> ForwardingParams:
        return ForwardingParams(self.m11, self.m21, self.n11, self.n12, self.c1, self.c2, lambda1, lambda2)


def empathic_game(fp: ForwardingParams) -> BimatrixGame:
    """Per-cell empathic transform of the expected forwarding game; rows/cols are (F, nF)."""
    material = {
        (0, 0): (fp.m11 - fp.c1, fp.n11 - fp.c2),
        (0, 1): (-fp.c1, fp.n12),
        (1, 0): (fp.m21, -fp.c2),
        (1, 1): (0.0, 0.0),
    }
    wide = max(abs(fp.lambda1), abs(fp.lambda2)) > 1.0
    lam = EmpathyMatrix.from_pairs(2, {(0, 1): fp.lambda1, (1, 0): fp.lambda2}, allow_wide=wide)
    a, b = np.zeros((2, 2)), np.zeros((2, 2))
    for cell, payoffs in material.items():
        a[cell], b[cell] = empathic_transform(payoffs, lam)
    return BimatrixGame(("F", "nF"), ("F", "nF"), a, b)


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return math.copysign(math.inf, num) if num != 0.0 else math.nan
    return num / den


def forwarding_thresholds(fp: ForwardingParams) -> dict[str, float]:
    """Empathy thresholds that delimit the low / medium / high bands of each relay."""
    return {
        "player1_medium": _ratio(fp.c1 + fp.m21 - fp.m11, fp.n11),
        "player1_high": _ratio(fp.c1, fp.n12),
        "player2_medium": _ratio(fp.c2 + fp.n12 - fp.n11, fp.m11),
        "player2_medium_alternative": _ratio(fp.c2 + fp.n12 - fp.n11, fp.m11 + fp.c1),
        "player2_high": _ratio(fp.c2, fp.m21),
    }


def empathy_band(lam: float, medium: float, high: float, atol: float = 1e-12) -> str:
    if any(abs(lam - t) <= atol for t in (0.0, medium, high) if math.isfinite(t)):
        return "boundary"
    if lam < 0:
        return "negative"
    if lam < medium:
        return "low"
    if lam < high:
        return "medium"
    return "high"


_BAND_OUTCOMES = {
    ("high", "high"): "FF-unique",
    ("high", "medium"): "FF-unique",
    ("medium", "high"): "FF-unique",
    ("medium", "medium"): "FF+nFnF+mixed",
    ("high", "low"): "FnF",
    ("high", "negative"): "FnF",
    ("low", "high"): "nFF",
    ("negative", "high"): "nFF",
}


def band_outcome(band1: str, band2: str) -> str:
    """Outcome label the threshold bands predict."""
    if "boundary" in (band1, band2):
        return "degenerate"
    return _BAND_OUTCOMES.get((band1, band2), "nFnF")


def label_equilibria(eqset: EquilibriumSet) -> str:
    if eqset.degenerate:
        return "degenerate"
    pure = set(eqset.pure)
    if not eqset.mixed and len(pure) == 1:
        ((row, col),) = pure
        return "FF-unique" if (row, col) == ("F", "F") else f"{row}{col}"
    if pure == {("F", "F"), ("nF", "nF")} and len(eqset.mixed) == 1:
        return "FF+nFnF+mixed"
    return "other"


@dataclass(frozen=True)
class OutcomeReport:
    label: str
    equilibria: EquilibriumSet
    thresholds: dict[str, float]
    band1: str
    band2: str
    band_label: str
    agrees_with_bands: bool


def classify_outcome(fp: ForwardingParams) -> OutcomeReport:
    """Label the empathic forwarding game from its enumerated equilibria.

    The enumeration is ground truth; the threshold bands are attached for
    cross-reference and a disagreement is logged.
    """
    game = empathic_game(fp)
    eqset = mixed_nash_2x2(game)
    label = label_equilibria(eqset)
    thresholds = forwarding_thresholds(fp)
    band1 = empathy_band(fp.lambda1, thresholds["player1_medium"], thresholds["player1_high"])
    band2 = empathy_band(fp.lambda2, thresholds["player2_medium"], thresholds["player2_high"])
    predicted = band_outcome(band1, band2)
    agrees = predicted == label
    if not agrees:
        logger.warning(
            f"enumerated outcome {label} disagrees with bands ({band1}, {band2}) -> {predicted} "
            f"at lambda=({fp.lambda1}, {fp.lambda2})"
        )
    logger.debug(f"lambda=({fp.lambda1}, {fp.lambda2}): {label}")
    return OutcomeReport(label, eqset, thresholds, band1, band2, predicted, agrees)


def classification_table(fp: ForwardingParams, lambdas1: Sequence[float], lambdas2: Sequence[float]) -> pd.DataFrame:
    """Classify every (lambda1, lambda2) pair of the two grids."""
    rows = []
    for lam1 in lambdas1:
        for lam2 in lambdas2:
            rep = classify_outcome(fp.with_empathy(lam1, lam2))
            rows.append(
                {
                    "lambda1": float(lam1),
                    "lambda2": float(lam2),
                    "label": rep.label,
                    "band1": rep.band1,
                    "band2": rep.band2,
                    "band_label": rep.band_label,
                    "agrees_with_bands": rep.agrees_with_bands,
                }
            )
    return pd.DataFrame(rows)


# === Selfish / perspective-taking types ===


@dataclass(frozen=True)
class TypeParams:
    """Material forwarding game seen by the two relay types.

    ``m11_1``/``m21_1`` are player 1's rewards and ``m11_2``/``m12_2`` player 2's.
    """

    m11_1: float
    m21_1: float
    m11_2: float
    m12_2: float
    c1: float
    c2: float


@dataclass(frozen=True)
class PairingOutcome:
    weight: float
    equilibria: tuple[Profile, ...]


@dataclass(frozen=True)
class TypeInteractionReport:
    mu: float
    pairings: dict[str, PairingOutcome]
    mixture: dict[str, float]
    forward_rate: float


PAIRINGS = ("PT-PT", "PT-Se", "Se-PT", "Se-Se")


def type_interaction(mu: float, params: TypeParams) -> TypeInteractionReport:
    """Equilibrium outcome of every type pairing and their mu-weighted mixture.

    ``mu`` is the selfish (Se) share; perspective-taking (PT) relays always
    forward. A pairing with several pure equilibria splits its weight equally.
    """
    if not 0.0 <= mu <= 1.0:
        raise InvalidParameterError(f"selfish share mu={mu} is outside [0, 1]")
    material = BimatrixGame(
        ("F", "nF"),
        ("F", "nF"),
        [[params.m11_1 - params.c1, -params.c1], [params.m21_1, 0.0]],
        [[params.m11_2 - params.c2, params.m12_2], [-params.c2, 0.0]],
    )
    weights = {
        "PT-PT": (1 - mu) ** 2,
        "PT-Se": (1 - mu) * mu,
        "Se-PT": mu * (1 - mu),
        "Se-Se": mu**2,
    }
    pairings: dict[str, PairingOutcome] = {}
    mixture = {label: 0.0 for label in ("FF", "FnF", "nFF", "nFnF", "mixed")}
    forward_rate = 0.0
    for name in PAIRINGS:
        t1, t2 = name.split("-")
        r = [0] if t1 == "PT" else [0, 1]
        c = [0] if t2 == "PT" else [0, 1]
        sub = BimatrixGame(
            tuple(material.rows[i] for i in r),
            tuple(material.cols[j] for j in c),
            material.payoff1[np.ix_(r, c)],
            material.payoff2[np.ix_(r, c)],
        )
        eqs = tuple(pure_nash(sub))
        w = weights[name]
        pairings[name] = PairingOutcome(w, eqs)
        if not eqs:
            interior = mixed_nash_2x2(material).mixed
            if not interior:
                raise DegenerateConditioningError(
                    f"{name} pairing has neither a pure nor an interior equilibrium at mu={mu}"
                )
            mixed = interior[0]
            mixture["mixed"] += w
            forward_rate += w * 0.5 * (mixed.x[0] + mixed.y[0])
            continue
        for row, col in eqs:
            mixture[f"{row}{col}"] += w / len(eqs)
            forward_rate += w / len(eqs) * 0.5 * ((row == "F") + (col == "F"))
    return TypeInteractionReport(mu, pairings, mixture, forward_rate)
