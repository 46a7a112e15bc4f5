# ------------------------------------------------------------------------------
# FILE: reports.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Everything that touches the output directory: atomic CSV/JSON writers, the
# run manifest with output checksums, and rich rendering of a finished run.
# No arithmetic happens here beyond formatting.
# ------------------------------------------------------------------------------

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from rich import print as rprint
from rich.console import Console
from rich.syntax import Syntax
from rich.table import Table

from .errors import StructuralError

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
FLOAT_FORMAT = "%.12g"


# === Serialisation ===


def plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-ready values."""
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(data: Any) -> str:
    return json.dumps(plain(data), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# === Atomic writers ===


def write_text_atomic(path: Path, text: str) -> Path:
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_csv(path: Path, frame: pd.DataFrame, index: bool = False) -> Path:
    text = frame.to_csv(index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    write_text_atomic(path, text)
    logger.info(f"wrote {path} ({len(frame)} rows)")
    return path


def write_json(path: Path, data: Any) -> Path:
    write_text_atomic(path, dumps_json(data))
    logger.info(f"wrote {path}")
    return path


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(
    out_dir: Path,
    tables: Mapping[str, pd.DataFrame],
    documents: Mapping[str, Any],
    texts: Mapping[str, str] | None = None,
) -> list[Path]:
    """Write ``<name>.csv`` per table, ``<name>.json`` per document and ``<name>.txt`` per text.

    A table whose index is named is written with it.
    """
    written = []
    for name in sorted(tables):
        frame = tables[name]
        keep_index = frame.index.name is not None
        written.append(write_csv(out_dir / f"{name}.csv", frame, index=keep_index))
    for name in sorted(documents):
        written.append(write_json(out_dir / f"{name}.json", documents[name]))
    for name in sorted(texts or {}):
        written.append(write_text_atomic(out_dir / f"{name}.txt", texts[name]))
    return written


def write_manifest(
    out_dir: Path, config: Mapping[str, Any], version: str, seed: int, outputs: list[Path], **extra: Any
) -> Path:
    """Echo of the inputs plus a checksum per output; holds no timestamps."""
    manifest = {
        "config": config,
        "version": version,
        "seed": seed,
        "outputs": {p.relative_to(out_dir).as_posix(): sha256_file(p) for p in sorted(outputs)},
        **extra,
    }
    return write_json(out_dir / MANIFEST, manifest)


def read_manifest(out_dir: Path) -> dict[str, Any]:
    path = Path(out_dir) / MANIFEST
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise StructuralError(f"{out_dir} has no {MANIFEST}; is it a run directory?") from None


# === Console rendering ===


def print_json(data: Any, title: str) -> None:
    """Pretty-print a JSON-able value with a section title."""
    rprint(f"\n[bold]=== {title} ===[/bold]")
    rprint(Syntax(dumps_json(data), "json", theme="monokai", line_numbers=False))


def frame_table(title: str, frame: pd.DataFrame, max_rows: int = 20) -> Table:
    table = Table(title=title, show_lines=False)
    for column in frame.columns:
        table.add_column(str(column))
    for _, row in frame.head(max_rows).iterrows():
        table.add_row(*(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row.tolist()))
    if len(frame) > max_rows:
        table.caption = f"{len(frame) - max_rows} more rows"
    return table


def render_run(out_dir: Path, console: Console | None = None, max_rows: int = 20) -> None:
    """Show a finished run: manifest summary, then every CSV it lists."""
    console = console or Console()
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir)
    config = manifest.get("config", {})
    console.print(
        f"[bold]{config.get('kind', '?')}[/bold] scenario {config.get('name') or '(unnamed)'} "
        f"- version {manifest.get('version')} - seed {manifest.get('seed')}"
    )
    for name, digest in manifest.get("outputs", {}).items():
        path = out_dir / name
        if not path.exists():
            console.print(f"[red]missing output {name}[/red]")
            continue
        if sha256_file(path) != digest:
            console.print(f"[yellow]{name} changed since the run[/yellow]")
        if path.suffix == ".csv":
            console.print(frame_table(name, pd.read_csv(path), max_rows))
        elif path.suffix == ".txt":
            console.print(path.read_text(encoding="utf-8"), markup=False)
        else:
            console.print(Syntax(path.read_text(encoding="utf-8"), "json", theme="monokai", line_numbers=False))
