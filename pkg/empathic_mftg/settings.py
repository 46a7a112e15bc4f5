# ------------------------------------------------------------------------------
# FILE: settings.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Environment-driven defaults (loaded from a local .env when present) and the
# single logging setup used by the command-line front end.
# ------------------------------------------------------------------------------

from __future__ import annotations

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# === Defaults (overridable through the environment or CLI flags) ===
DEFAULT_CONFIG = os.getenv("EMPATHIC_MFTG_CONFIG")
DEFAULT_OUTPUT_DIR = Path(os.getenv("EMPATHIC_MFTG_OUTPUT_DIR", "outputs"))
DEFAULT_LOG_LEVEL = os.getenv("EMPATHIC_MFTG_LOG_LEVEL", "INFO").upper()
DEFAULT_SEED = int(os.getenv("EMPATHIC_MFTG_SEED", "0"))

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def configure_logging(level: str = DEFAULT_LOG_LEVEL) -> None:
    """Configure the root logger once for CLI use.

    Args:
        level: One of DEBUG, INFO, WARNING, ERROR. Unknown names fall back to INFO.
    """
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        force=True,
    )
