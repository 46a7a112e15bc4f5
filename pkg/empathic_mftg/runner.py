# ------------------------------------------------------------------------------
# FILE: runner.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Dispatch a validated scenario to its module, write the outputs and the
# manifest, and run parameter sweeps over a scenario on a thread pool.
#
# Each kind has a build step (module inputs from the parameter block) and a
# compute step (module operations only). Errors in the build step are
# configuration errors; everything raised later is a computation error.
# ------------------------------------------------------------------------------

from __future__ import annotations

import copy
import hashlib
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from . import __version__
from . import auction, energy, forwarding, lq_game, matrix_games, measure_dp
from . import empathy_data
from .core import EmpathyMatrix
from .errors import EmpathyToolkitError, InvalidParameterError, ScenarioConfigError, StructuralError
from .reports import write_csv, write_manifest, write_outputs
from .scenarios import ScenarioConfig, Tolerances, resolve_path, validate_scenario
from .settings import DEFAULT_SEED

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["index", "parameter", "value", "metric", "result", "status", "error"]


# === Seeds ===


def seed_stream(seed: int, name: str) -> np.random.SeedSequence:
    """Named child of the run seed; the key is a stable hash of ``name``."""
    key = int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")
    return np.random.SeedSequence(seed, spawn_key=(key,))


# === Results ===


@dataclass
class Computation:
    """What a compute step hands back: tables, JSON documents, text and scalar metrics."""

    tables: dict[str, pd.DataFrame] = field(default_factory=dict)
    documents: dict[str, Any] = field(default_factory=dict)
    texts: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RunResult:
    kind: str
    out_dir: Path
    seed: int
    outputs: list[Path]
    manifest: Path
    metrics: dict[str, float]


@dataclass(frozen=True)
class RunContext:
    seed: int
    workers: int | None
    tolerances: Tolerances
    config_path: Path | None = None

    def path(self, target: str) -> Path:
        return resolve_path(self.config_path, target)


def _key(name: str, **labels: Any) -> str:
    if not labels:
        return name
    inner = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in labels.items())
    return f"{name}[{inner}]"


def _lambda_label(lam: float, grid: Sequence[float]) -> dict[str, float]:
    """Label a per-lambda metric only when the grid has several points."""
    return {"lambda": float(lam)} if len(grid) > 1 else {}


def _empathy(spec: float | Sequence[Sequence[float]], n: int) -> EmpathyMatrix:
    if isinstance(spec, (int, float)):
        return EmpathyMatrix.uniform(n, float(spec))
    return EmpathyMatrix.from_rows(spec)


def _equilibria_frame(points, tol: Tolerances) -> pd.DataFrame:
    """Equilibrium sets of labelled 2x2 games, one row per equilibrium."""
    frames = []
    for labels, game in points:
        eqset = matrix_games.mixed_nash_2x2(game, eps=tol.audit_eps, atol=tol.tie_atol)
        frame = matrix_games.equilibria_table(eqset, game)
        for k, (name, value) in enumerate(labels.items()):
            frame.insert(k, name, float(value))
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["profile", "payoff1", "payoff2", "type"])
    return pd.concat(frames, ignore_index=True)


# === Collision ===


def _build_collision(config, ctx):
    p = config.params
    return p.p1, p.p2, [float(x) for x in p.lambdas]


def _compute_collision(inputs, ctx) -> Computation:
    p1, p2, lambdas = inputs
    curve = matrix_games.collision_curve(p1, p2, lambdas)
    games = [({"lambda": lam}, matrix_games.collision_game(p1, p2, lam, lam)) for lam in lambdas]
    out = Computation(
        tables={"collision_curve": curve, "collision_equilibria": _equilibria_frame(games, ctx.tolerances)}
    )
    for lam, gap in zip(curve["lambda"], curve["gap"]):
        out.metrics[_key("gap", **_lambda_label(lam, lambdas))] = float(gap)
    return out


# === Forwarding ===


def _build_forwarding(config, ctx):
    p = config.params
    if p.hops is not None:
        probs = [forwarding.path_success_probability(h) for h in p.hops]
    else:
        probs = p.p
    params = forwarding.CrowdForwardParams(
        n=p.n,
        m_star=p.m_star,
        alpha=p.alpha,
        gamma=p.gamma,
        p=np.asarray(probs, dtype=float),
        lam=_empathy(p.lam, p.n),
        sensitivity=_empathy(p.sensitivity, p.n),
        neighbors=p.neighbors,
    )
    profiles = [forwarding.parse_profile(prof.split(","), p.n) for prof in p.profiles]
    dilemma = None
    if p.dilemma is not None:
        d = p.dilemma
        dilemma = (matrix_games.ForwardingParams(d.m11, d.m21, d.n11, d.n12, d.c1, d.c2), d.lambdas1, d.lambdas2)
    types = None
    if p.types is not None:
        t = p.types
        types = (matrix_games.TypeParams(t.m11_1, t.m21_1, t.m11_2, t.m12_2, t.c1, t.c2), t.mus)
    return params, profiles, list(p.payoff_kinds), p.hops, p.samples, dilemma, types


def _compute_forwarding(inputs, ctx) -> Computation:
    params, profiles, kinds, hops, samples, dilemma, types = inputs
    out = Computation()
    for kind in kinds:
        table = forwarding.equilibrium_table(params, kind)
        out.tables[f"equilibria_{kind}"] = table
        out.metrics[_key("equilibria", kind=kind)] = float(table["equilibrium"].sum())

    rows = []
    for flags in profiles:
        label = forwarding.profile_label(flags).replace(",", "-")
        for kind in kinds:
            audit = forwarding.is_equilibrium(params, flags, kind, tol=ctx.tolerances.gain_tol)
            out.tables[f"deviations_{kind}_{label}"] = forwarding.deviation_table(audit)
            span = None if kind == "material" else forwarding.sustaining_range(params, flags, kind)
            rows.append(
                {
                    "profile": label,
                    "payoff_kind": kind,
                    "equilibrium": audit.is_equilibrium,
                    "max_gain": float(audit.gains.max()),
                    "sustaining_lower": np.nan if span is None else span[0],
                    "sustaining_upper": np.nan if span is None else span[1],
                }
            )
            out.metrics[_key("max_gain", profile=label, kind=kind)] = float(audit.gains.max())
    if rows:
        out.tables["profile_audits"] = pd.DataFrame(rows)

    if samples and hops is not None:
        targets = profiles or [tuple([True] * params.n)]
        streams = seed_stream(ctx.seed, "forwarding").spawn(len(targets))
        out.tables["sampled_payoffs"] = pd.concat(
            [forwarding.sampled_payoff_table(params, hops, flags, samples, s) for flags, s in zip(targets, streams)],
            ignore_index=True,
        )

    if dilemma is not None:
        fp, lambdas1, lambdas2 = dilemma
        table = matrix_games.classification_table(fp, lambdas1, lambdas2)
        out.tables["dilemma_classification"] = table
        games = [
            ({"lambda1": lam1, "lambda2": lam2}, matrix_games.empathic_game(fp.with_empathy(lam1, lam2)))
            for lam1 in lambdas1
            for lam2 in lambdas2
        ]
        out.tables["dilemma_equilibria"] = _equilibria_frame(games, ctx.tolerances)
        out.metrics["band_disagreements"] = float((~table["agrees_with_bands"]).sum())

    if types is not None:
        tp, mus = types
        type_rows = []
        for mu in mus:
            report = matrix_games.type_interaction(mu, tp)
            type_rows.append({"mu": report.mu, **report.mixture, "forward_rate": report.forward_rate})
            out.metrics[_key("forward_rate", mu=float(mu))] = report.forward_rate
        out.tables["type_mixture"] = pd.DataFrame(type_rows)
    return out


# === Auction ===


def _build_auction(config, ctx):
    p = config.params
    spec = p.distribution
    if spec.name == "uniform":
        dist = auction.CostDistribution.uniform(spec.upper)
    elif spec.name == "truncated_exponential":
        if spec.rate is None:
            raise InvalidParameterError("truncated_exponential needs distribution.rate")
        dist = auction.CostDistribution.truncated_exponential(spec.rate, spec.upper)
    elif spec.name == "piecewise_linear":
        if spec.xs is None or spec.fs is None:
            raise InvalidParameterError("piecewise_linear needs distribution.xs and distribution.fs")
        dist = auction.CostDistribution.piecewise_linear(spec.xs, spec.fs)
    else:
        if spec.path is None:
            raise InvalidParameterError("csv distribution needs distribution.path")
        dist = auction.CostDistribution.from_csv(ctx.path(spec.path))
    return dist, list(p.lambdas), list(p.altruistic_lambdas), list(p.costs)


def _compute_auction(inputs, ctx) -> Computation:
    dist, lambdas, altruistic, costs = inputs
    out = Computation()
    curves = {"bid_curve": lambdas}
    if altruistic:
        # altruism enters the bid as a negative spite coefficient
        curves["altruistic_bid_curve"] = [-lam for lam in altruistic]
    for name, grid in curves.items():
        table = auction.bid_curve(dist, grid, costs)
        out.tables[name] = table
        metric = "price" if name == "bid_curve" else "altruistic_price"
        for lam in table.columns:
            for cost, price in table[lam].items():
                out.metrics[_key(metric, **_lambda_label(abs(lam), grid), cost=cost)] = float(price)
    return out


# === Energy ===


def _build_energy(config, ctx):
    p = config.params
    if isinstance(p.theta, list):
        if len(p.theta) != p.n:
            raise StructuralError(f"theta lists {len(p.theta)} scales for {p.n} consumers")
        model = energy.MarketModel(np.asarray(p.theta, dtype=float), p.p0, p.slope, p.supply)
    else:
        model = energy.MarketModel.symmetric(p.n, p.p0, p.slope, p.supply, p.theta)
    return model, [float(x) for x in p.lambdas], energy.two_peak_day(p.hours)


def _compute_energy(inputs, ctx) -> Computation:
    model, lambdas, day = inputs
    tol = ctx.tolerances
    out = Computation()
    rows = []
    for lam in lambdas:
        result = energy.demand_equilibrium(
            model, lam, tol=tol.fixed_point_tol, max_iter=tol.energy_max_iter, residual_tol=tol.foc_residual
        )
        rows.append(
            {
                "lambda": lam,
                "aggregate": result.aggregate,
                "price": result.price,
                "residual": result.residual,
                "iterations": result.iterations,
                **{f"demand_{i}": d for i, d in enumerate(result.demand)},
            }
        )
        out.metrics[_key("aggregate", **_lambda_label(lam, lambdas))] = result.aggregate
    out.tables["equilibria"] = pd.DataFrame(rows)

    hourly = energy.peak_comparison(model, day, lambdas, max_workers=ctx.workers)
    peaks = energy.peak_summary(hourly)
    out.tables["peaks"] = peaks
    out.tables["hourly_demand"] = hourly.set_axis([f"lambda={lam:g}" for lam in lambdas], axis=1)
    for lam, peak in zip(peaks["lambda"], peaks["peak_demand"]):
        out.metrics[_key("peak_demand", **_lambda_label(lam, lambdas))] = float(peak)
    return out


# === LQ game ===


def _per_player(value):
    """A flat per-player list becomes a column so it broadcasts over time."""
    arr = np.asarray(value, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def _build_lq(config, ctx):
    p = config.params
    params = lq_game.LqGameParams(
        n=p.n,
        T=p.T,
        alpha=p.alpha,
        alpha_bar=p.alpha_bar,
        b=p.b,
        sigma=p.sigma,
        q=_per_player(p.q),
        q_bar=_per_player(p.q_bar),
        c=_per_player(p.c),
        qT=p.qT,
        qT_bar=p.qT_bar,
        lam=_empathy(p.lam, p.n),
        neighbors=p.neighbors,
        m0=p.m0,
        var0=p.var0,
        noise=p.noise,
    )
    return params, p.paths, p.chunk_size


def _compute_lq(inputs, ctx) -> Computation:
    params, paths, chunk_size = inputs
    schedule = lq_game.riccati_sweep(params, cond_limit=ctx.tolerances.riccati_cond_limit)
    analytic = lq_game.analytic_cost(params, schedule)
    simulated = None
    if paths:
        simulated = lq_game.simulate(
            params, schedule, paths, seed_stream(ctx.seed, "lq"), chunk_size=chunk_size, max_workers=ctx.workers
        )
    out = Computation(
        tables={
            "schedule": lq_game.schedule_table(schedule),
            "costs": lq_game.cost_table(analytic, simulated),
            "mean_state": lq_game.mean_state_table(params, schedule, simulated),
        }
    )
    for i in range(params.n):
        out.metrics[_key("gamma0", player=i)] = float(schedule.gamma[i, 0])
        out.metrics[_key("cost", player=i)] = float(analytic[i])
    out.metrics["terminal_mean"] = float(lq_game.mean_state(params, schedule)[-1])
    return out


# === Measure-space dynamic programming ===


def _build_measure_dp(config, ctx):
    p = config.params
    n = len(p.actions)
    game = measure_dp.tabular_game(
        p.states,
        p.actions,
        p.horizon,
        p.rewards,
        p.kernels,
        p.terminal,
        _empathy(p.lam, n),
        p.initial,
        mean_field_weight=p.mean_field_weight,
        neighbors=p.neighbors,
    )
    grid = measure_dp.SimplexGrid(game.n_states, p.resolution)
    if p.check_resolution and grid.K % 2:
        raise InvalidParameterError(f"resolution - 1 must be even to halve the grid, got {p.resolution}")
    return game, grid, p.action_step, p.check_resolution


def _compute_measure_dp(inputs, ctx) -> Computation:
    game, grid, step, check = inputs
    tol = ctx.tolerances
    report = measure_dp.mean_field_equilibrium(
        game, grid, max_iter=tol.dp_max_iter, tol=tol.dp_policy_tol, step=step
    )
    out = Computation()
    for i in range(game.n_players):
        values = measure_dp.evaluate_policy(game, report.profile, i, grid)
        out.tables[f"values_player{i}"] = measure_dp.value_table(game, grid, values)
        out.tables[f"policy_player{i}"] = measure_dp.policy_table(game, grid, report.profile[i], i)
        out.metrics[_key("gap", player=i)] = float(report.gaps[i])
        out.metrics[_key("value", player=i)] = float(report.values[i])
    out.tables["flow"] = measure_dp.flow_table(game, report.flow)
    summary = {
        "converged": report.converged,
        "iterations": report.iterations,
        "gaps": report.gaps,
        "values": report.values,
    }
    if check:
        uniform = [np.full((game.n_states, a), 1.0 / a) for a in game.action_counts]
        changes = [
            measure_dp.resolution_check(game, uniform, i, grid.resolution, step=step).max_change
            for i in range(game.n_players)
        ]
        summary["resolution_check"] = {"resolution": grid.resolution, "max_change": changes}
        out.metrics["resolution_change"] = max(changes)
    out.documents["equilibrium"] = summary
    out.metrics["converged"] = float(report.converged)
    out.metrics["iterations"] = float(report.iterations)
    return out


# === IRI cohort ===


def _build_iri(config, ctx):
    p = config.params
    records = []
    if p.records is not None:
        path = ctx.path(p.records)
        if not path.is_file():
            raise StructuralError(f"records file {path} does not exist")
        records = empathy_data.load_records(path)
    reference = empathy_data.load_published_aggregates() if p.include_reference else None
    return records, reference, p


def _compute_iri(inputs, ctx) -> Computation:
    records, reference, p = inputs
    out = Computation()
    if reference is not None:
        out.documents["published_aggregates"] = reference.model_dump(mode="json")
    if not records:
        return out
    report = empathy_data.experiment_report(
        records, condition=p.condition, cutoff=p.cutoff, min_group=p.min_group, reference=reference
    )
    out.tables.update(
        {
            "scores": report.scores,
            "outcome_counts": report.outcome_counts,
            "correlations": report.correlations.rename_axis("scale"),
            "cooperation": report.cooperation,
            "scale_distribution": report.scale_distribution,
        }
    )
    tp = report.total_probability
    out.documents["total_probability"] = {
        "condition": tp.condition,
        "p_condition": tp.p_condition,
        "p_forward_given": tp.p_forward_given,
        "p_forward_given_not": tp.p_forward_given_not,
        "p_forward": tp.p_forward,
        "flags": report.flags,
        "notes": list(report.notes),
    }
    out.texts["summary"] = empathy_data.render_summary(report)
    out.metrics["p_forward"] = tp.p_forward
    out.metrics["p_condition"] = tp.p_condition
    return out


Handler = tuple[Callable[[Any, RunContext], Any], Callable[[Any, RunContext], Computation]]

HANDLERS: dict[str, Handler] = {
    "collision": (_build_collision, _compute_collision),
    "forwarding": (_build_forwarding, _compute_forwarding),
    "auction": (_build_auction, _compute_auction),
    "energy": (_build_energy, _compute_energy),
    "lq": (_build_lq, _compute_lq),
    "measure_dp": (_build_measure_dp, _compute_measure_dp),
    "iri": (_build_iri, _compute_iri),
}


# === Entry points ===


def run_scenario(
    config: ScenarioConfig,
    out_dir: str | Path,
    seed: int | None = None,
    workers: int | None = None,
    config_path: str | Path | None = None,
) -> RunResult:
    """Run one scenario and write its outputs plus ``manifest.json`` into ``out_dir``.

    The seed resolves as: argument, then the scenario's ``seed``, then the
    environment default.

    Raises:
        ScenarioConfigError: the parameter block violates a module invariant.
        EmpathyToolkitError: a module operation failed.
    """
    out_dir = Path(out_dir)
    seed = seed if seed is not None else config.seed if config.seed is not None else DEFAULT_SEED
    ctx = RunContext(seed, workers, config.tolerances, Path(config_path) if config_path else None)
    build, compute = HANDLERS[config.kind]
    try:
        inputs = build(config, ctx)
    except (InvalidParameterError, StructuralError) as exc:
        raise ScenarioConfigError(f"{config.kind} scenario: {exc}", {"params": str(exc)}) from exc

    logger.info(f"running {config.kind} scenario {config.name or '(unnamed)'} with seed {seed}")
    result = compute(inputs, ctx)
    outputs = write_outputs(out_dir, result.tables, result.documents, result.texts)
    manifest = write_manifest(
        out_dir, config.model_dump(mode="json"), __version__, seed, outputs, metrics=result.metrics
    )
    return RunResult(config.kind, out_dir, seed, outputs, manifest, result.metrics)


def _set_dotted(data: dict[str, Any], path: str, value: Any) -> None:
    parts = path.split(".")
    node: Any = data
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node or node[part] is None:
            raise ScenarioConfigError(f"sweep parameter {path!r} does not resolve", {path: f"no block {part!r}"})
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ScenarioConfigError(f"sweep parameter {path!r} does not resolve", {path: f"no field {leaf!r}"})
    if isinstance(node[leaf], list) and not isinstance(value, list):
        value = [value]
    node[leaf] = value


def point_config(config: ScenarioConfig, parameter: str, value: Any) -> ScenarioConfig:
    """The scenario with ``params.<parameter>`` replaced by ``value`` and re-validated."""
    path = parameter if parameter.startswith("params.") else f"params.{parameter}"
    data = copy.deepcopy(config.model_dump(mode="json"))
    _set_dotted(data, path, value)
    return validate_scenario(data)


@dataclass(frozen=True)
class SweepResult:
    out_dir: Path
    table: pd.DataFrame
    manifest: Path
    failures: int


def sweep(
    config: ScenarioConfig,
    parameter: str,
    grid: Sequence[Any],
    out_dir: str | Path,
    seed: int | None = None,
    workers: int | None = None,
    config_path: str | Path | None = None,
) -> SweepResult:
    """One run per grid value into ``points/<index>/`` and a long-format ``sweep.csv``.

    A failing point is recorded on its row and the sweep moves on.

    Raises:
        ScenarioConfigError: ``parameter`` does not resolve in the scenario.
    """
    out_dir = Path(out_dir)
    seed = seed if seed is not None else config.seed if config.seed is not None else DEFAULT_SEED
    path = parameter if parameter.startswith("params.") else f"params.{parameter}"
    _set_dotted(copy.deepcopy(config.model_dump(mode="json")), path, None)

    def run_point(job: tuple[int, Any]) -> list[dict[str, Any]]:
        index, value = job
        base = {"index": index, "parameter": parameter, "value": value}
        try:
            result = run_scenario(point_config(config, parameter, value), out_dir / "points" / str(index),
                                  seed=seed, config_path=config_path)
        except EmpathyToolkitError as exc:
            logger.warning(f"sweep point {index} ({parameter}={value}) failed: {exc}")
            return [{**base, "metric": "", "result": np.nan, "status": "failed", "error": str(exc)}]
        return [{**base, "metric": k, "result": v, "status": "ok", "error": ""} for k, v in result.metrics.items()]

    jobs = list(enumerate(grid))
    if workers and workers > 1 and jobs:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_point, jobs))
    else:
        parts = [run_point(job) for job in jobs]

    rows = [row for part in parts for row in part]
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    failures = int((table["status"] == "failed").sum()) if len(table) else 0
    written = [write_csv(out_dir / "sweep.csv", table)]
    manifest = write_manifest(
        out_dir, config.model_dump(mode="json"), __version__, seed, written,
        sweep={"parameter": parameter, "grid": list(grid), "failures": failures},
    )
    logger.info(f"sweep over {parameter}: {len(jobs)} points, {failures} failed")
    return SweepResult(out_dir, table, manifest, failures)


def metric_series(table: pd.DataFrame, metric: str) -> pd.Series:
    """One metric of a sweep table as a series indexed by grid value."""
    picked = table[(table["metric"] == metric) & (table["status"] == "ok")]
    return picked.set_index("value")["result"]
