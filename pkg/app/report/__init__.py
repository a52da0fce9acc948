"""Report package: table emitters for experiment sweeps."""
from __future__ import annotations

from .tables import format_value, render, render_csv, render_markdown  # noqa: F401
