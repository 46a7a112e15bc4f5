import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from empathic_mftg.errors import ConvergenceError, ScenarioConfigError
from empathic_mftg.runner import SWEEP_COLUMNS, metric_series, point_config, run_scenario, seed_stream, sweep
from empathic_mftg.scenarios import load_scenario, validate_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def scenario(kind, **params):
    data = json.loads((SCENARIOS / f"{kind}.json").read_text(encoding="utf-8"))
    data["params"].update(params)
    return validate_scenario(data)


def test_seed_streams_are_stable_and_distinct():
    a = seed_stream(42, "lq").generate_state(4)
    assert np.array_equal(a, seed_stream(42, "lq").generate_state(4))
    assert not np.array_equal(a, seed_stream(42, "forwarding").generate_state(4))
    assert not np.array_equal(a, seed_stream(43, "lq").generate_state(4))


def test_collision_curve_starts_at_p1_and_decreases(tmp_path):
    result = run_scenario(scenario("collision"), tmp_path)
    assert result.metrics["gap[lambda=0]"] == pytest.approx(0.8)
    curve = pd.read_csv(tmp_path / "collision_curve.csv")
    assert len(curve) == 21
    assert np.all(np.diff(curve["gap"]) <= 1e-12)
    assert (tmp_path / "manifest.json").exists()


def test_auction_uniform_prices(tmp_path):
    result = run_scenario(scenario("auction"), tmp_path)
    assert result.metrics["price[lambda=0,cost=0.5]"] == pytest.approx(0.75, abs=1e-8)
    assert result.metrics["price[lambda=2,cost=0.5]"] == pytest.approx(0.5 + 0.5 / 4, abs=1e-8)
    altruistic = pd.read_csv(tmp_path / "altruistic_bid_curve.csv", index_col="cost")
    assert altruistic.shape == (10, 3)


def test_identical_seed_gives_identical_bytes(tmp_path):
    config = scenario("lq", paths=2000, chunk_size=500)
    first = run_scenario(config, tmp_path / "a", seed=42, workers=2)
    second = run_scenario(config, tmp_path / "b", seed=42)
    names = sorted(p.name for p in first.outputs) + ["manifest.json"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_forwarding_sampling_is_seeded(tmp_path):
    config = scenario("forwarding", samples=500)
    run_scenario(config, tmp_path / "a", seed=3)
    run_scenario(config, tmp_path / "b", seed=3)
    run_scenario(config, tmp_path / "c", seed=4)
    a, b, c = (pd.read_csv(tmp_path / d / "sampled_payoffs.csv") for d in "abc")
    pd.testing.assert_frame_equal(a, b)
    assert not a["sample_mean"].equals(c["sample_mean"])


def test_forwarding_outputs(tmp_path):
    result = run_scenario(scenario("forwarding", samples=0), tmp_path)
    audits = pd.read_csv(tmp_path / "profile_audits.csv")
    nobody = audits[(audits["profile"] == "nF-nF-nF-nF") & (audits["payoff_kind"] == "material")]
    assert nobody["equilibrium"].item()
    assert result.metrics["equilibria[kind=material]"] >= 1
    assert (tmp_path / "dilemma_classification.csv").exists()
    mixture = pd.read_csv(tmp_path / "type_mixture.csv")
    assert list(mixture["mu"]) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_build_errors_are_configuration_errors(tmp_path):
    with pytest.raises(ScenarioConfigError):
        run_scenario(scenario("forwarding", m_star=9), tmp_path)
    with pytest.raises(ScenarioConfigError):
        run_scenario(scenario("energy", theta=[1.0, 2.0]), tmp_path)


def test_solver_failures_propagate(tmp_path):
    data = json.loads((SCENARIOS / "energy.json").read_text(encoding="utf-8"))
    data["tolerances"] = {"energy_max_iter": 1}
    with pytest.raises(ConvergenceError):
        run_scenario(validate_scenario(data), tmp_path)


def test_measure_dp_run(tmp_path):
    result = run_scenario(scenario("measure_dp"), tmp_path)
    assert result.metrics["converged"] == 1.0
    assert "resolution_change" in result.metrics
    summary = json.loads((tmp_path / "equilibrium.json").read_text())
    assert summary["converged"] is True
    assert len(pd.read_csv(tmp_path / "flow.csv")) == 4


def test_iri_run_reads_records_next_to_the_scenario(tmp_path):
    path = SCENARIOS / "iri.json"
    result = run_scenario(load_scenario(path), tmp_path, config_path=path)
    assert 0.0 <= result.metrics["p_forward"] <= 1.0
    counts = pd.read_csv(tmp_path / "outcome_counts.csv", index_col="gender")
    assert counts.to_numpy().sum() == 12
    assert "Forwarding outcomes" in (tmp_path / "summary.txt").read_text(encoding="utf-8")
    published = json.loads((tmp_path / "published_aggregates.json").read_text())
    assert published["outcome_matrices"]["women"] == {"FF": 19, "FnF": 16, "nFF": 4, "nFnF": 16}


def test_scalar_sweep_value_becomes_a_list():
    config = point_config(scenario("energy"), "lambdas", 0.4)
    assert config.params.lambdas == [0.4]
    assert point_config(scenario("lq"), "params.lam", 0.5).params.lam == 0.5


def test_energy_sweep_peaks_do_not_increase(tmp_path):
    result = sweep(scenario("energy"), "lambdas", [0.0, 0.3, 0.6, 0.9], tmp_path, workers=2)
    assert result.failures == 0
    peaks = metric_series(result.table, "peak_demand")
    assert list(peaks.index) == [0.0, 0.3, 0.6, 0.9]
    assert np.all(np.diff(peaks.to_numpy()) <= 1e-12)
    assert (tmp_path / "points" / "3" / "manifest.json").exists()
    assert list(pd.read_csv(tmp_path / "sweep.csv").columns) == SWEEP_COLUMNS


def test_lq_sweep_gamma_does_not_decrease(tmp_path):
    result = sweep(scenario("lq", paths=0), "lam", [0.0, 0.25, 0.5, 0.75, 1.0], tmp_path)
    gamma0 = metric_series(result.table, "gamma0[player=0]").to_numpy()
    assert len(gamma0) == 5
    assert np.all(np.diff(gamma0) >= 0)


def test_failed_points_are_recorded(tmp_path):
    result = sweep(scenario("forwarding", samples=0), "m_star", [3, 9], tmp_path)
    assert result.failures == 1
    failed = result.table[result.table["status"] == "failed"]
    assert failed["index"].tolist() == [1]
    assert "m* = 9" in failed["error"].item()
    assert (result.table[result.table["status"] == "ok"]["index"] == 0).all()


def test_empty_grid_gives_empty_table(tmp_path):
    result = sweep(scenario("collision"), "p1", [], tmp_path)
    assert result.table.empty
    assert list(result.table.columns) == SWEEP_COLUMNS
    assert (tmp_path / "sweep.csv").read_text() == ",".join(SWEEP_COLUMNS) + "\n"


def test_unresolvable_sweep_parameter(tmp_path):
    with pytest.raises(ScenarioConfigError):
        sweep(scenario("collision"), "dilemma.m11", [0.5], tmp_path)


def test_collision_run_exports_equilibrium_sets(tmp_path):
    run_scenario(scenario("collision"), tmp_path)
    table = pd.read_csv(tmp_path / "collision_equilibria.csv")
    assert list(table.columns) == ["lambda", "profile", "payoff1", "payoff2", "type"]
    half = table[np.isclose(table["lambda"], 0.5)]
    assert set(half.loc[half["type"] == "pure", "profile"]) == {"T,W", "W,T"}
    assert (half["type"] == "mixed").sum() == 1
    assert not ((table["lambda"] > 0) & (table["profile"] == "T,T")).any()


def test_dilemma_run_exports_equilibrium_sets(tmp_path):
    run_scenario(scenario("forwarding", samples=0), tmp_path)
    table = pd.read_csv(tmp_path / "dilemma_equilibria.csv")
    assert list(table.columns) == ["lambda1", "lambda2", "profile", "payoff1", "payoff2", "type"]
    assert set(zip(table["lambda1"], table["lambda2"])) == {
        (a, b) for a in (0.0, 0.25, 0.5, 0.75, 1.0) for b in (0.0, 0.25, 0.5, 0.75, 1.0)
    }
    both = table[(table["lambda1"] == 1.0) & (table["lambda2"] == 1.0)]
    assert both[["profile", "type"]].values.tolist() == [["F,F", "pure"]]
    assert both["payoff1"].item() == pytest.approx(1.0)
    assert both["payoff2"].item() == pytest.approx(1.0)
