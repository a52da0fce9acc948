from __future__ import annotations
import os
import logging
from pathlib import Path

# Initialise module logger
logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Paths & constants
# ---------------------------------------------------------------------------
PROJECT_ROOT = Path(__file__).resolve().parent.parent
STORAGE_DIR = PROJECT_ROOT / "storage"
RESULTS_DIR = STORAGE_DIR / os.getenv("RESULTS_DIR", "results")

BOUNDARY_TAGS: tuple[str, ...] = ("left", "right", "top", "bottom")

# Darcy at h = 2^-6 is ~20k unknowns, Biot at 2^-5 ~14k: dense spectra beyond are impractical.
DARCY_MAX_H_EXPONENT = 6
BIOT_MAX_H_EXPONENT = 5
# random saddle systems: n = 2^e unknowns in the first block, n / 2 in the second
ALGEBRAIC_MAX_SIZE_EXPONENT = 11


def default_output_path(experiment: str, fmt: str) -> Path:
    """Where a table lands when no ``--out`` is given."""
    RESULTS_DIR.mkdir(parents=True, exist_ok=True)
    return RESULTS_DIR / f"{experiment}.{fmt}"


# ---------------------------------------------------------------------------
# Grid helpers
# ---------------------------------------------------------------------------

def subdivisions(h_exponent: int) -> int:
    """N such that h = 1/N = 2^-h_exponent."""
    return 2 ** h_exponent


def exponent_label(value: float) -> str:
    """Render 1e-4 as ``10^-4``, 1.4e-4 as ``1.4x10^-4`` and 1 as ``1``."""
    if value == 1.0:
        return "1"
    mantissa, exponent = f"{value:.6e}".split("e")
    mantissa, exponent = f"{float(mantissa):g}", int(exponent)
    if mantissa == "1":
        return f"10^{exponent}"
    return f"{mantissa}x10^{exponent}"


def write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` creating parent directories; returns the path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(text)
    logger.info("Wrote %s (%s bytes)", path, len(text.encode()))
    return path
