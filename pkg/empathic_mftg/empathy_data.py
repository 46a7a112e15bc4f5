# ------------------------------------------------------------------------------
# FILE: empathy_data.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Interpersonal Reactivity Index (IRI) scoring and the analysis of the
# forwarding experiment: subscale sums with reversed items, Pearson
# correlations, outcome tabulation per gender, cooperation levels of
# dominant-scale groups and the total-probability cooperation estimate.
# The published aggregates ship as reference data and are echoed, never
# recomputed.
# ------------------------------------------------------------------------------

from __future__ import annotations

import io
import itertools
import json
import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from rich.console import Console
from rich.table import Table
from scipy import stats

from .errors import IriValidationError, StructuralError, UndefinedCorrelationError

logger = logging.getLogger(__name__)

SUBSCALES: tuple[str, ...] = ("PT", "EC", "FS", "PD")
N_ITEMS = 28
ITEMS_PER_SCALE = 7
MAX_ANSWER = 4
DOMINANT_CUTOFF = 18
MIN_GROUP = 5
OUTCOMES: tuple[str, ...] = ("FF", "FnF", "nFF", "nFnF", "other")
Decision = Literal["F", "nF", "other"]
Context = Literal["friend", "stranger"]

# (subscale, reversed) for items 1..28
_DAVIS_ITEMS: tuple[tuple[str, bool], ...] = (
    ("FS", False), ("EC", False), ("PT", True), ("EC", True), ("FS", False), ("PD", False), ("FS", True),
    ("PT", False), ("EC", False), ("PD", False), ("PT", False), ("FS", True), ("PD", True), ("EC", True),
    ("PT", True), ("FS", False), ("PD", False), ("EC", True), ("PD", True), ("EC", False), ("PT", False),
    ("EC", False), ("FS", False), ("PD", False), ("PT", False), ("FS", False), ("PD", False), ("PT", False),
)
KEY_NOTES = ("item printed as (44) 'Lose control in emergencies (PD)' is scored as item 24",)


# === Types ===


@dataclass(frozen=True)
class IriKey:
    """Subscale label and reversal flag of every item, in item order."""

    items: tuple[tuple[str, bool], ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.items) != N_ITEMS:
            raise StructuralError(f"an IRI key has {N_ITEMS} items, got {len(self.items)}")
        for scale in SUBSCALES:
            count = sum(1 for s, _ in self.items if s == scale)
            if count != ITEMS_PER_SCALE:
                raise StructuralError(f"subscale {scale} has {count} items, expected {ITEMS_PER_SCALE}")
        unknown = {s for s, _ in self.items} - set(SUBSCALES)
        if unknown:
            raise StructuralError(f"unknown subscale labels {sorted(unknown)}")

    @classmethod
    def standard(cls) -> IriKey:
        return cls(_DAVIS_ITEMS, KEY_NOTES)

    def items_of(self, scale: str) -> list[int]:
        """1-based item numbers of a subscale."""
        return [k + 1 for k, (s, _) in enumerate(self.items) if s == scale]

    def reversed_items(self) -> list[int]:
        return [k + 1 for k, (_, rev) in enumerate(self.items) if rev]


def _check_answer(item: int, value: object) -> int | None:
    if value is None:
        return None
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise IriValidationError(item, value) from None
    if math.isnan(number):
        return None
    if isinstance(value, bool) or not number.is_integer() or not 0 <= number <= MAX_ANSWER:
        raise IriValidationError(item, value)
    return int(number)


@dataclass(frozen=True)
class IriRecord:
    """One participant: 28 answers (None = missing), decision and context."""

    id: str
    gender: str
    answers: tuple[int | None, ...]
    decision: Decision
    context: Context = "friend"
    partner_id: str | None = None

    def __post_init__(self) -> None:
        if len(self.answers) != N_ITEMS:
            raise StructuralError(f"record {self.id} has {len(self.answers)} answers, expected {N_ITEMS}")
        answers = tuple(_check_answer(k + 1, v) for k, v in enumerate(self.answers))
        object.__setattr__(self, "answers", answers)
        if self.decision not in ("F", "nF", "other"):
            raise StructuralError(f"record {self.id}: unknown decision {self.decision!r}")
        if self.context not in ("friend", "stranger"):
            raise StructuralError(f"record {self.id}: unknown context {self.context!r}")


@dataclass(frozen=True)
class SubscaleScores:
    PT: int
    EC: int
    FS: int
    PD: int
    missing: int = 0

    def as_dict(self) -> dict[str, int]:
        return {scale: getattr(self, scale) for scale in SUBSCALES}


# === Scoring ===


def score_iri(record: IriRecord, key: IriKey | None = None) -> SubscaleScores:
    """Subscale sums; reversed items count 4 - answer and missing items are skipped."""
    key = key or IriKey.standard()
    sums = dict.fromkeys(SUBSCALES, 0)
    missing = 0
    for k, ((scale, reverse), raw) in enumerate(zip(key.items, record.answers)):
        answer = _check_answer(k + 1, raw)
        if answer is None:
            missing += 1
            continue
        sums[scale] += MAX_ANSWER - answer if reverse else answer
    return SubscaleScores(**sums, missing=missing)


def score_frame(data: pd.DataFrame, key: IriKey | None = None) -> pd.DataFrame:
    """Vectorised scoring of a frame with columns q1..q28; adds a ``missing`` column."""
    key = key or IriKey.standard()
    columns = [f"q{k}" for k in range(1, N_ITEMS + 1)]
    absent = [c for c in columns if c not in data.columns]
    if absent:
        raise StructuralError(f"answer columns missing: {absent}")
    answers = data[columns].astype(float)
    bad = answers.notna() & ~answers.isin([float(v) for v in range(MAX_ANSWER + 1)])
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        raise IriValidationError(col + 1, answers.iat[row, col])
    reversed_cols = [f"q{k}" for k in key.reversed_items()]
    answers[reversed_cols] = MAX_ANSWER - answers[reversed_cols]
    out = pd.DataFrame(index=data.index)
    for scale in SUBSCALES:
        out[scale] = answers[[f"q{k}" for k in key.items_of(scale)]].sum(axis=1, min_count=0).astype(int)
    out["missing"] = answers.isna().sum(axis=1)
    return out


def dominant_scales(scores: SubscaleScores, cutoff: int = DOMINANT_CUTOFF) -> tuple[str, ...]:
    """Subscales scoring at or above ``cutoff`` (on the 0-28 range)."""
    return tuple(scale for scale in SUBSCALES if getattr(scores, scale) >= cutoff)


def scale_label(scales: Sequence[str]) -> str:
    return " - ".join(scales) if scales else "Other scale"


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation in [-1, 1]."""
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise StructuralError(f"pearson needs two equal-length vectors, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise UndefinedCorrelationError(f"pearson needs at least 2 points, got {a.size}")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedCorrelationError("pearson is undefined for a constant vector")
    return float(np.clip(stats.pearsonr(a, b).statistic, -1.0, 1.0))


# === Ingestion ===


def load_records(csv_path: str | Path) -> list[IriRecord]:
    """Read one participant per row: id, gender, q1..q28, decision, context[, partner_id]."""
    frame = pd.read_csv(csv_path, dtype={"id": str, "gender": str, "partner_id": str}, keep_default_na=True)
    required = ["id", "gender", *(f"q{k}" for k in range(1, N_ITEMS + 1)), "decision", "context"]
    absent = [c for c in required if c not in frame.columns]
    if absent:
        raise StructuralError(f"{csv_path}: missing columns {absent}")
    records = []
    for row in frame.itertuples(index=False):
        values = row._asdict()
        partner = values.get("partner_id")
        records.append(
            IriRecord(
                id=str(values["id"]),
                gender=str(values["gender"]),
                answers=tuple(values[f"q{k}"] for k in range(1, N_ITEMS + 1)),
                decision=str(values["decision"]),
                context=str(values["context"]),
                partner_id=None if partner is None or pd.isna(partner) else str(partner),
            )
        )
    logger.info(f"loaded {len(records)} IRI records from {csv_path}")
    return records


class PublishedAggregates(BaseModel):
    """Tables as printed with the experiment; kept for display and regression only."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    participants: dict[str, int]
    outcome_matrices: dict[str, dict[str, int]]
    refined_outcome_matrices: dict[str, dict[str, int]]
    outcome_chart: dict[str, dict[str, int]]
    correlations: dict[str, float]
    cooperation_levels: dict[str, float]
    scale_distribution: dict[str, dict[str, int]]
    item_coefficients: dict[str, dict[str, float]]
    responsiveness: dict[str, dict[str, float]]
    pt_outcomes: dict[str, dict[str, str]]
    notes: list[str]


def load_published_aggregates() -> PublishedAggregates:
    text = resources.files("empathic_mftg").joinpath("data", "published_aggregates.json").read_text(encoding="utf-8")
    return PublishedAggregates.model_validate(json.loads(text))


# === Report ===


@dataclass(frozen=True, eq=False)
class TotalProbability:
    condition: str
    p_condition: float
    p_forward_given: float | None
    p_forward_given_not: float | None
    p_forward: float


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    scores: pd.DataFrame
    outcome_counts: pd.DataFrame
    correlations: pd.DataFrame
    cooperation: pd.DataFrame
    scale_distribution: pd.DataFrame
    total_probability: TotalProbability
    flags: list[str] = field(default_factory=list)
    notes: tuple[str, ...] = ()
    reference: PublishedAggregates | None = None


def outcome_cell(record: IriRecord, partner: IriRecord | None) -> str:
    """(own decision, partner decision) label; anything incomplete counts as other."""
    if partner is None or "other" in (record.decision, partner.decision):
        return "other"
    return f"{record.decision}{partner.decision}"


def _condition(name_or_fn: str | Callable[[SubscaleScores], bool], cutoff: int) -> tuple[str, Callable]:
    if callable(name_or_fn):
        return getattr(name_or_fn, "__name__", "custom"), name_or_fn
    if name_or_fn not in SUBSCALES:
        raise StructuralError(f"unknown conditioning subscale {name_or_fn!r}")
    return f"{name_or_fn} >= {cutoff}", lambda s: getattr(s, name_or_fn) >= cutoff


def total_probability(
    scores: Sequence[SubscaleScores],
    decisions: Sequence[str],
    condition: str | Callable[[SubscaleScores], bool] = "PT",
    cutoff: int = DOMINANT_CUTOFF,
) -> TotalProbability:
    """P(F) = P(F|1)P(1) + P(F|0)P(0) over participants who chose F or nF."""
    label, test = _condition(condition, cutoff)
    pairs = [(bool(test(s)), d == "F") for s, d in zip(scores, decisions) if d in ("F", "nF")]
    if not pairs:
        return TotalProbability(label, 0.0, None, None, 0.0)
    flags = np.array(pairs, dtype=bool)
    inside, forward = flags[:, 0], flags[:, 1]
    p1 = float(inside.mean())
    given = float(forward[inside].mean()) if inside.any() else None
    given_not = float(forward[~inside].mean()) if (~inside).any() else None
    p_forward = (given or 0.0) * p1 + (given_not or 0.0) * (1.0 - p1)
    return TotalProbability(label, p1, given, given_not, p_forward)


def experiment_report(
    records: Sequence[IriRecord],
    key: IriKey | None = None,
    condition: str | Callable[[SubscaleScores], bool] = "PT",
    cutoff: int = DOMINANT_CUTOFF,
    min_group: int = MIN_GROUP,
    reference: PublishedAggregates | None = None,
) -> ExperimentReport:
    """Scores, outcome counts per gender, correlations, group cooperation and P(F).

    Small groups are flagged and logged, not fatal. ``reference`` is echoed
    unchanged next to the computed sections.
    """
    if not records:
        raise StructuralError("experiment_report needs at least one record")
    key = key or IriKey.standard()
    flags: list[str] = []
    by_id = {r.id: r for r in records}
    scored = [score_iri(r, key) for r in records]

    scores = pd.DataFrame(
        [{"id": r.id, "gender": r.gender, **s.as_dict(), "missing": s.missing, "decision": r.decision,
          "context": r.context, "dominant": scale_label(dominant_scales(s, cutoff))}
         for r, s in zip(records, scored)]
    )

    cells = [outcome_cell(r, by_id.get(r.partner_id) if r.partner_id else None) for r in records]
    outcome_counts = (
        pd.DataFrame({"gender": scores["gender"], "outcome": cells})
        .value_counts()
        .unstack(fill_value=0)
        .reindex(columns=list(OUTCOMES), fill_value=0)
        .rename_axis(index="gender", columns=None)
    )

    complete = scores[scores["missing"] == 0]
    corr = pd.DataFrame(np.nan, index=list(SUBSCALES), columns=list(SUBSCALES))
    for a, b in itertools.combinations(SUBSCALES, 2):
        try:
            corr.loc[a, b] = corr.loc[b, a] = pearson(complete[a], complete[b])
        except (UndefinedCorrelationError, StructuralError) as exc:
            flags.append(f"correlation {a}-{b} undefined: {exc}")
    for scale in SUBSCALES:
        corr.loc[scale, scale] = 1.0

    rows = []
    groups = [(s,) for s in SUBSCALES] + list(itertools.combinations(SUBSCALES, 2))
    dominant = [set(dominant_scales(s, cutoff)) for s in scored]
    for group in groups:
        members = [r.decision for r, d in zip(records, dominant) if set(group) <= d and r.decision != "other"]
        size = len(members)
        cooperators = sum(1 for d in members if d == "F")
        small = size < min_group
        if small:
            message = f"group {' + '.join(group)} has {size} participants (< {min_group})"
            flags.append(message)
            logger.warning(message)
        rows.append(
            {"group": " + ".join(group), "size": size, "cooperators": cooperators,
             "level": cooperators / size if size else np.nan, "small_group": small}
        )
    cooperation = pd.DataFrame(rows)

    distribution = (
        pd.crosstab(scores["dominant"], scores["gender"]).rename_axis(index="scales", columns=None)
    )
    distribution["Total"] = distribution.sum(axis=1)

    tp = total_probability(scored, [r.decision for r in records], condition, cutoff)
    logger.info(f"experiment report over {len(records)} records: P(F) = {tp.p_forward:.4f}")
    return ExperimentReport(
        scores, outcome_counts, corr, cooperation, distribution, tp, flags, key.notes, reference
    )


def _frame_table(title: str, frame: pd.DataFrame, index_name: str) -> Table:
    table = Table(title=title)
    table.add_column(index_name)
    for col in frame.columns:
        table.add_column(str(col), justify="right")
    for idx, row in frame.iterrows():
        table.add_row(str(idx), *(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
    return table


def render_summary(report: ExperimentReport, width: int = 100) -> str:
    """Plain-text summary laid out like the experiment's tables."""
    console = Console(file=io.StringIO(), width=width, color_system=None, force_terminal=False)
    console.print(_frame_table("Forwarding outcomes", report.outcome_counts, "gender"))
    console.print(_frame_table("Subscale correlation (Pearson)", report.correlations, ""))
    console.print(_frame_table("Cooperation of dominant-scale groups", report.cooperation.set_index("group"), "group"))
    console.print(_frame_table("IRI scale distribution", report.scale_distribution, "scales"))
    tp = report.total_probability
    console.print(
        f"P(F) = P(F|1)P(1) + P(F|0)P(0) with 1 = [{tp.condition}]: "
        f"P(1)={tp.p_condition:.4f}, P(F|1)={tp.p_forward_given}, P(F|0)={tp.p_forward_given_not}, "
        f"P(F)={tp.p_forward:.4f}",
        markup=False,
    )
    if report.reference is not None:
        published = pd.DataFrame(report.reference.outcome_matrices).T.reindex(columns=list(OUTCOMES[:4]))
        console.print(_frame_table("Published outcome matrices (reference)", published, "gender"))
        console.print(
            "Published correlations (reference): "
            + ", ".join(f"{k} {v:g}" for k, v in report.reference.correlations.items()),
            markup=False,
        )
    for note in report.notes:
        console.print(f"note: {note}", markup=False)
    for flag in report.flags:
        console.print(f"flag: {flag}", markup=False)
    return console.file.getvalue()


def reference_outcomes(reference: PublishedAggregates) -> Mapping[str, tuple[int, int, int, int]]:
    """Published (FF, FnF, nFF, nFnF) counts per gender."""
    return {
        gender: tuple(cells[o] for o in OUTCOMES[:4])
        for gender, cells in reference.outcome_matrices.items()
    }
