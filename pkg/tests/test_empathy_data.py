import math

import numpy as np
import pandas as pd
import pytest

from empathic_mftg.empathy_data import (
    IriKey,
    IriRecord,
    dominant_scales,
    experiment_report,
    load_published_aggregates,
    load_records,
    outcome_cell,
    pearson,
    reference_outcomes,
    render_summary,
    score_frame,
    score_iri,
    total_probability,
)
from empathic_mftg.errors import IriValidationError, StructuralError, UndefinedCorrelationError

# answer to item k is k mod 5
CYCLIC = tuple(k % 5 for k in range(1, 29))
PT_ITEMS = (3, 8, 11, 15, 21, 25, 28)


def make_record(answers, decision="F", gender="women", rid="p1", partner=None, context="friend"):
    return IriRecord(rid, gender, tuple(answers), decision, context, partner)


def pt_record(rid, high, decision, gender="women", partner=None):
    answers = [2] * 28
    if high:
        for item in PT_ITEMS:
            answers[item - 1] = 0 if item in (3, 15) else 4
    return make_record(answers, decision, gender, rid, partner)


def test_standard_key_shape():
    key = IriKey.standard()
    assert key.items_of("PT") == list(PT_ITEMS)
    assert key.reversed_items() == [3, 4, 7, 12, 13, 14, 15, 18, 19]


def test_all_zero_and_all_four():
    zero = score_iri(make_record([0] * 28))
    four = score_iri(make_record([4] * 28))
    assert zero.PT == 8
    assert four.PT == 20
    for scale in ("PT", "EC", "FS", "PD"):
        assert getattr(zero, scale) + getattr(four, scale) == 28


def test_hand_scored_fixture():
    scores = score_iri(make_record(CYCLIC))
    assert scores.as_dict() == {"PT": 13, "EC": 9, "FS": 10, "PD": 10}
    assert scores.missing == 0


def test_missing_items_are_skipped_and_counted():
    answers = list(CYCLIC)
    answers[2] = None
    scores = score_iri(make_record(answers))
    assert scores.PT == 12
    assert scores.missing == 1


def test_reversal_involution():
    flipped = score_iri(make_record([4 - a for a in CYCLIC]))
    original = score_iri(make_record(CYCLIC))
    for scale in ("PT", "EC", "FS", "PD"):
        assert getattr(flipped, scale) == 28 - getattr(original, scale)


@pytest.mark.parametrize("bad", [5, -1, 2.5, "x"])
def test_out_of_range_answer_names_the_item(bad):
    answers = list(CYCLIC)
    answers[6] = bad
    with pytest.raises(IriValidationError) as info:
        make_record(answers)
    assert info.value.item == 7


def test_frame_scoring_matches_record_scoring():
    rows = [CYCLIC, tuple(4 - a for a in CYCLIC), (2,) * 28]
    frame = pd.DataFrame([dict(zip([f"q{k}" for k in range(1, 29)], r)) for r in rows])
    frame.loc[0, "q3"] = np.nan
    scored = score_frame(frame)
    for idx, answers in enumerate(rows):
        answers = list(answers)
        if idx == 0:
            answers[2] = None
        expected = score_iri(make_record(answers))
        assert scored.loc[idx, ["PT", "EC", "FS", "PD"]].tolist() == list(expected.as_dict().values())
        assert scored.loc[idx, "missing"] == expected.missing


def test_dominant_scales():
    scores = score_iri(pt_record("a", True, "F"))
    assert dominant_scales(scores) == ("PT",)
    assert dominant_scales(scores, cutoff=14) == ("PT", "EC", "FS", "PD")


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)


def test_pearson_matches_textbook_formula():
    rng = np.random.default_rng(17)
    x, y = rng.normal(size=40), rng.normal(size=40)
    dx, dy = x - x.mean(), y - y.mean()
    expected = np.sum(dx * dy) / math.sqrt(np.sum(dx**2) * np.sum(dy**2))
    assert pearson(x, y) == pytest.approx(expected, abs=1e-12)
    assert pearson(y, x) == pytest.approx(pearson(x, y), abs=1e-15)
    assert pearson(3 * x + 1, 0.5 * y - 2) == pytest.approx(pearson(x, y), abs=1e-12)
    assert -1.0 <= pearson(x, y) <= 1.0


@pytest.mark.parametrize("x, y", [([1, 1, 1], [1, 2, 3]), ([1], [2])])
def test_pearson_undefined(x, y):
    with pytest.raises(UndefinedCorrelationError):
        pearson(x, y)


def test_pearson_length_mismatch():
    with pytest.raises(StructuralError):
        pearson([1, 2, 3], [1, 2])


def test_outcome_cells():
    a = pt_record("a", True, "F", partner="b")
    b = pt_record("b", False, "nF", partner="a")
    c = pt_record("c", True, "other")
    assert outcome_cell(a, b) == "FnF"
    assert outcome_cell(b, a) == "nFF"
    assert outcome_cell(a, None) == "other"
    assert outcome_cell(a, c) == "other"


def test_total_probability_collapses_to_high_pt_share():
    records = [pt_record(f"h{k}", True, "F") for k in range(3)] + [pt_record(f"l{k}", False, "nF") for k in range(5)]
    report = experiment_report(records, min_group=1)
    tp = report.total_probability
    assert tp.p_condition == pytest.approx(3 / 8)
    assert tp.p_forward_given == 1.0
    assert tp.p_forward_given_not == 0.0
    assert tp.p_forward == pytest.approx(3 / 8)


def test_total_probability_with_custom_condition():
    scores = [score_iri(pt_record("x", True, "F")), score_iri(pt_record("y", False, "F"))]
    tp = total_probability(scores, ["F", "nF"], condition=lambda s: s.EC > 100)
    assert tp.p_condition == 0.0
    assert tp.p_forward_given is None
    assert tp.p_forward == pytest.approx(0.5)


def test_outcome_counts_sum_to_cohort_size():
    records = [
        pt_record("a", True, "F", "women", partner="b"),
        pt_record("b", True, "F", "women", partner="a"),
        pt_record("c", False, "nF", "women", partner="d"),
        pt_record("d", True, "F", "men", partner="c"),
        pt_record("e", False, "nF", "men"),
    ]
    report = experiment_report(records)
    counts = report.outcome_counts
    assert counts.loc["women"].sum() == 3
    assert counts.loc["men"].sum() == 2
    assert counts.loc["women", "FF"] == 2
    assert counts.loc["women", "nFF"] == 1
    assert counts.loc["men", "FnF"] == 1
    assert counts.loc["men", "other"] == 1
    assert list(counts.columns) == ["FF", "FnF", "nFF", "nFnF", "other"]


def test_small_groups_are_flagged_not_fatal(caplog):
    records = [pt_record("a", True, "F"), pt_record("b", False, "nF")]
    report = experiment_report(records, min_group=5)
    pt_row = report.cooperation.set_index("group").loc["PT"]
    assert pt_row["size"] == 1 and pt_row["small_group"]
    assert any("PT" in flag for flag in report.flags)
    assert "participants" in caplog.text


def test_correlations_over_complete_records():
    rng = np.random.default_rng(4)
    records = [make_record(rng.integers(0, 5, size=28), rid=f"r{k}") for k in range(30)]
    report = experiment_report(records)
    scores = report.scores
    assert report.correlations.loc["PT", "EC"] == pytest.approx(pearson(scores["PT"], scores["EC"]))
    assert np.allclose(report.correlations.to_numpy(), report.correlations.to_numpy().T)


def test_published_aggregates_are_echoed():
    published = load_published_aggregates()
    report = experiment_report([pt_record("a", True, "F")], reference=published)
    outcomes = reference_outcomes(report.reference)
    assert outcomes["women"] == (19, 16, 4, 16)
    assert outcomes["men"] == (11, 8, 3, 13)
    assert report.reference.correlations["PT-EC"] == 0.81
    assert report.reference.correlations["PT-FS"] == 0.9382
    assert report.reference.correlations["EC-FS"] == 0.8709
    assert report.reference.correlations["EC-PD"] == -0.3462
    assert report.reference.participants["total"] == 47


def test_load_records(tmp_path):
    row = {"id": "7", "gender": "men", **{f"q{k}": a for k, a in enumerate(CYCLIC, start=1)},
           "decision": "F", "context": "stranger", "partner_id": ""}
    frame = pd.DataFrame([row, {**row, "id": "8", "q5": None, "partner_id": "7"}])
    path = tmp_path / "cohort.csv"
    frame.to_csv(path, index=False)
    records = load_records(path)
    assert [r.id for r in records] == ["7", "8"]
    assert records[0].partner_id is None
    assert records[1].partner_id == "7"
    assert records[1].answers[4] is None
    assert score_iri(records[0]).as_dict() == {"PT": 13, "EC": 9, "FS": 10, "PD": 10}


def test_load_records_needs_all_columns(tmp_path):
    path = tmp_path / "broken.csv"
    pd.DataFrame([{"id": "1", "gender": "women"}]).to_csv(path, index=False)
    with pytest.raises(StructuralError):
        load_records(path)


def test_summary_mentions_tables_and_notes():
    report = experiment_report([pt_record("a", True, "F")], reference=load_published_aggregates())
    text = render_summary(report)
    assert "Forwarding outcomes" in text
    assert "Subscale correlation" in text
    assert "item 24" in text
    assert "Published outcome matrices" in text
