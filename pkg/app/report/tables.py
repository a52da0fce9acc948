"""Render sweep results as markdown tables (rows K, columns h) or long-format CSV."""
from __future__ import annotations

import math
from typing import TYPE_CHECKING

import pandas as pd

from app.utils import exponent_label

if TYPE_CHECKING:
    from app.config import ExperimentConfig
    from app.experiment_pipeline import GridResult

CSV_COLUMNS = [
    "experiment",
    "problem",
    "conductivity",
    "metric",
    "preconditioner",
    "pressure_mode",
    "theta",
    "K",
    "h_exponent",
    "value",
    "n_filtered_null",
    "minres_iterations",
    "minres_converged",
]


def format_value(value: float) -> str:
    """Table precision: one decimal below 100, integers below 1000, then 2 significant digits."""
    if value < 100:
        return f"{value:.1f}"
    if value < 1000:
        return f"{value:.0f}"
    exponent = int(math.floor(math.log10(value)))
    mantissa = value / 10**exponent
    if round(mantissa, 1) >= 10:
        mantissa, exponent = mantissa / 10, exponent + 1
    return f"{mantissa:.1f}x10^{exponent}"


def _iterations(result: "GridResult") -> str:
    if result.minres_converged:
        return str(result.minres_iterations)
    return f">{result.minres_iterations}"


def _cell_text(group: list["GridResult"]) -> str:
    """One value, or "x(y)" when a DG and an exact-Schur run share the cell."""
    values = [format_value(r.value) for r in group]
    text = values[0] if len(values) == 1 else f"{values[0]}({values[1]})"
    if any(r.minres_iterations is not None for r in group):
        text += " [" + "/".join(_iterations(r) for r in group) + "]"
    return text


def _theta_label(theta: float) -> str:
    return "0" if theta == 0 else f"{theta / math.pi:g}pi"


def _column_label(config: "ExperimentConfig", exponent: int) -> str:
    if config.problem == "algebraic":
        return f"n={2**exponent}"
    return f"2^-{exponent}"


def _caption(config: "ExperimentConfig") -> str:
    if config.metric == "infsup":
        return "Discrete inf-sup constant beta in the K-weighted H(div) and L^2 + K^1/2 H^1_h norms."
    if config.problem == "algebraic":
        parts = [f"Condition numbers of B A for random [[alpha A, B^T], [B, 0]], B of size n/2 x n, seed {config.seed}"]
    else:
        parts = [f"Condition numbers of B A, {config.problem}, {config.conductivity} conductivity"]
    if config.problem == "darcy":
        parts.append(f"flux fixed on {', '.join(config.essential_flux_tags)}")
        if config.pressure_mode == "both":
            parts.append("B2 entries read DG(exact Schur)")
    if config.minres:
        parts.append(f"MINRES iterations in brackets (rtol {config.minres_rtol:g})")
    return "; ".join(parts) + "."


def render_markdown(config: "ExperimentConfig", results: list["GridResult"]) -> str:
    sections: dict[tuple[float, str], dict[float, dict[str, list]]] = {}
    for result in results:
        p = result.point
        rows = sections.setdefault((p.theta, p.preconditioner), {})
        rows.setdefault(p.k, {}).setdefault(_column_label(config, p.h_exponent), []).append(result)

    if config.problem == "algebraic":
        row_name = "alpha \\ n"
    else:
        row_name = "K0 \\ h" if config.conductivity in ("jump", "tensor") else "K \\ h"
    lines = [f"# {config.experiment}", "", _caption(config), ""]
    for (theta, name), rows in sections.items():
        heading = "beta" if name == "infsup" else name
        if config.conductivity == "tensor":
            heading += f", theta = {_theta_label(theta)}"
        frame = pd.DataFrame.from_dict(
            {
                exponent_label(k): {col: _cell_text(group) for col, group in cols.items()}
                for k, cols in rows.items()
            },
            orient="index",
        )
        frame.index.name = row_name
        lines += [f"## {heading}", "", frame.to_markdown(disable_numparse=True), ""]
    return "\n".join(lines)


def results_frame(config: "ExperimentConfig", results: list["GridResult"]) -> pd.DataFrame:
    records = [
        {
            "experiment": config.experiment,
            "problem": config.problem,
            "conductivity": config.conductivity,
            "metric": config.metric,
            "preconditioner": r.point.preconditioner,
            "pressure_mode": r.point.pressure_mode or "",
            "theta": r.point.theta,
            "K": r.point.k,
            "h_exponent": r.point.h_exponent,
            "value": r.value,
            "n_filtered_null": r.n_filtered_null,
            "minres_iterations": r.minres_iterations,
            "minres_converged": r.minres_converged,
        }
        for r in results
    ]
    return pd.DataFrame.from_records(records, columns=CSV_COLUMNS)


def render_csv(config: "ExperimentConfig", results: list["GridResult"]) -> str:
    """Long format, one line per grid point and pressure mode, values at full precision."""
    return results_frame(config, results).to_csv(index=False, lineterminator="\n")


def render(config: "ExperimentConfig", results: list["GridResult"]) -> str:
    if config.output_format == "csv":
        return render_csv(config, results)
    return render_markdown(config, results)
