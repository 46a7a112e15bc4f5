# ------------------------------------------------------------------------------
# FILE: cli.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Command-line front end. Reads a scenario file, hands it to the runner and
# reports the outcome on the console.
#
# USAGE EXAMPLES:
#   empathic-mftg run --config scenarios/collision.json --out outputs/collision
#   empathic-mftg sweep --config scenarios/energy.json --parameter lambdas --grid 0:0.9:10
#   empathic-mftg validate --config scenarios/forwarding.json
#   empathic-mftg report --out outputs/collision
#   empathic-mftg schema
#
# EXIT CODES:
#   0 success, 1 invalid scenario or parameters, 2 computation failure.
# ------------------------------------------------------------------------------

from __future__ import annotations

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console

from . import __version__
from .errors import EmpathyToolkitError, InvalidParameterError, ScenarioConfigError, StructuralError
from .reports import print_json, render_run
from .runner import run_scenario, sweep
from .scenarios import load_scenario, scenario_schema
from .settings import DEFAULT_CONFIG, DEFAULT_LOG_LEVEL, DEFAULT_OUTPUT_DIR, LOG_LEVELS, configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_COMPUTATION = 2

console = Console()
err_console = Console(stderr=True)


# === Helpers ===


@contextmanager
def reported(context: str) -> Iterator[None]:
    """Turn toolkit errors into a red console message and the matching exit code."""
    try:
        yield
    except (ValidationError, ScenarioConfigError, InvalidParameterError, StructuralError) as exc:
        _show_error(context, exc)
        sys.exit(EXIT_INVALID)
    except EmpathyToolkitError as exc:
        _show_error(context, exc)
        sys.exit(EXIT_COMPUTATION)


def _show_error(context: str, exc: Exception) -> None:
    logger.debug(f"{context} failed", exc_info=exc)
    err_console.print(f"❌ {context}: {exc}", style="bold red", markup=False)
    for path, message in getattr(exc, "fields", {}).items():
        err_console.print(f"   {path}: {message}", style="red", markup=False)


def parse_grid(text: str) -> list[float]:
    """``"0,0.5,1"`` or ``"start:stop:points"``; an empty string is an empty grid."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            start, stop, points = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(points))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"{text!r} is neither a comma list nor start:stop:points ({exc})") from None


def _out_dir(out: str | None, configured: str | None, kind: str) -> Path:
    if out:
        return Path(out)
    if configured:
        return Path(configured)
    return DEFAULT_OUTPUT_DIR / kind


config_option = click.option(
    "--config",
    "config_path",
    default=DEFAULT_CONFIG,
    required=DEFAULT_CONFIG is None,
    type=click.Path(dir_okay=False),
    help="Scenario JSON file (default: $EMPATHIC_MFTG_CONFIG)",
)
seed_option = click.option(
    "--seed", type=click.IntRange(min=0), default=None, help="Run seed (overrides the scenario's seed)"
)
out_option = click.option("--out", default=None, help="Output directory (default: scenario output_dir or outputs/<kind>)")


# === Commands ===


@click.group()
@click.version_option(__version__, prog_name="empathic-mftg")
@click.option(
    "--log-level",
    default=DEFAULT_LOG_LEVEL if DEFAULT_LOG_LEVEL in LOG_LEVELS else "INFO",
    type=click.Choice(list(LOG_LEVELS)),
    help="Set logging level (default: $EMPATHIC_MFTG_LOG_LEVEL or INFO)",
)
def cli(log_level: str) -> None:
    """Scenario runner for empathy-modified games."""
    configure_logging(log_level)


@cli.command()
@config_option
@out_option
@seed_option
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Thread pool size for parallel parts")
def run(config_path: str, out: str | None, seed: int | None, workers: int | None) -> None:
    """Run one scenario and write its tables and manifest."""
    with reported(f"scenario {config_path}"):
        config = load_scenario(config_path)
        out_dir = _out_dir(out, config.output_dir, config.kind)
        logger.info(f"🚀 {config.kind} scenario -> {out_dir}")
        result = run_scenario(config, out_dir, seed=seed, workers=workers, config_path=config_path)
    console.print(f"✅ {result.kind}: {len(result.outputs)} files written to {result.out_dir} (seed {result.seed})")
    if result.metrics:
        print_json(result.metrics, "Metrics")


@cli.command("sweep")
@config_option
@out_option
@seed_option
@click.option("--parameter", required=True, help="Dotted path inside the scenario's params block, e.g. lambdas")
@click.option("--grid", "grid_text", required=True, help="Comma list (0,0.5,1) or start:stop:points")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Grid points run in parallel")
def sweep_command(
    config_path: str, out: str | None, seed: int | None, parameter: str, grid_text: str, workers: int | None
) -> None:
    """Re-run a scenario once per grid value and consolidate the metrics."""
    grid = parse_grid(grid_text)
    with reported(f"sweep of {parameter} over {config_path}"):
        config = load_scenario(config_path)
        out_dir = _out_dir(out, config.output_dir, f"{config.kind}_sweep")
        logger.info(f"🚀 sweeping {parameter} over {len(grid)} points -> {out_dir}")
        result = sweep(config, parameter, grid, out_dir, seed=seed, workers=workers, config_path=config_path)
    style = "yellow" if result.failures else "green"
    console.print(
        f"✅ sweep: {len(grid)} points, {result.failures} failed, table at {result.out_dir / 'sweep.csv'}",
        style=style,
        markup=False,
    )


@cli.command()
@config_option
def validate(config_path: str) -> None:
    """Check a scenario file without running it."""
    with reported(f"scenario {config_path}"):
        config = load_scenario(config_path)
    console.print(f"✅ valid {config.kind} scenario", markup=False)
    print_json(config.model_dump(mode="json"), "Scenario")


@cli.command()
@click.option("--out", required=True, type=click.Path(file_okay=False), help="A run or sweep output directory")
@click.option("--rows", type=click.IntRange(min=1), default=20, help="Rows shown per table")
def report(out: str, rows: int) -> None:
    """Render a finished run directory."""
    with reported(f"report of {out}"):
        render_run(Path(out), console, max_rows=rows)


@cli.command()
def schema() -> None:
    """Print the JSON schema of scenario files."""
    print_json(scenario_schema(), "Scenario schema")


def main() -> None:
    cli(prog_name="empathic-mftg")
