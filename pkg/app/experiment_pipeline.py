"""Pipeline that expands an experiment config into grid points, evaluates them and writes the table."""
from __future__ import annotations

import asyncio
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from tqdm.asyncio import tqdm_asyncio

from .config import ExperimentConfig
from .discretization import (
    AssembledSaddleSystem,
    ConstantConductivity,
    JumpConductivity,
    TensorConductivity,
    build_biot_system,
    build_darcy_system,
    build_unit_square,
)
from .report.tables import render
from .solvers import (
    build_algebraic_preconditioner,
    build_preconditioner,
    condition_number,
    infsup_constant,
    minres,
    random_saddle,
)
from .solvers.precond import qh_norm_block, vh_norm_matrix
from .trace.logger import logger
from .utils import default_output_path, subdivisions, write_text


@dataclass(frozen=True)
class GridPoint:
    k: float
    h_exponent: int
    preconditioner: str
    theta: float = 0.0
    pressure_mode: Optional[str] = None


@dataclass
class GridResult:
    point: GridPoint
    value: float
    n_filtered_null: int = 0
    minres_iterations: Optional[int] = None
    minres_converged: Optional[bool] = None


# ---------------------------------------------------------------------------
# Grid expansion
# ---------------------------------------------------------------------------

def _pressure_modes(config: ExperimentConfig, preconditioner: str) -> list[Optional[str]]:
    if config.problem != "darcy" or preconditioner != "B2":
        return [None]
    # a DG request on a tensor field means the k-scaled unit DG Laplacian
    primary = "scaled_dg" if config.conductivity == "tensor" else "dg"
    if config.pressure_mode == "both":
        return [primary, "exact_schur"]
    if config.pressure_mode == "dg":
        return [primary]
    return ["exact_schur"]


def expand_grid(config: ExperimentConfig) -> list[GridPoint]:
    """Grid points in table order: theta, preconditioner, pressure mode, K, h."""
    if config.metric == "infsup":
        return [GridPoint(k=k, h_exponent=e, preconditioner="infsup") for k in config.k_values for e in config.h_exponents]
    return [
        GridPoint(k=k, h_exponent=e, preconditioner=name, theta=theta, pressure_mode=mode)
        for theta in config.thetas
        for name in config.preconditioners
        for mode in _pressure_modes(config, name)
        for k in config.k_values
        for e in config.h_exponents
    ]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _conductivity(config: ExperimentConfig, point: GridPoint):
    if config.conductivity == "jump":
        return JumpConductivity(K0=point.k)
    if config.conductivity == "tensor":
        return TensorConductivity(K0=point.k, theta=point.theta)
    return ConstantConductivity(K=point.k)


def _system(config: ExperimentConfig, point: GridPoint):
    mesh = build_unit_square(subdivisions(point.h_exponent))
    if config.problem == "biot":
        return build_biot_system(mesh, point.k)
    return build_darcy_system(mesh, _conductivity(config, point), config.essential_flux_tags)


def _preconditioned(config: ExperimentConfig, point: GridPoint):
    """System (or bare matrix) and preconditioner of one condition-number grid point."""
    if config.problem == "algebraic":
        n = subdivisions(point.h_exponent)
        saddle = random_saddle(n, n // 2, point.k, seed=config.seed)
        return saddle.matrix(), build_algebraic_preconditioner(saddle, point.preconditioner)
    system = _system(config, point)
    return system, build_preconditioner(system, point.preconditioner, point.pressure_mode)


def evaluate_point(config: ExperimentConfig, point: GridPoint) -> GridResult:
    """Assemble, precondition and measure one grid point (runs in a worker thread)."""
    if config.metric == "infsup":
        system = _system(config, point)
        beta = infsup_constant(system, vh_norm_matrix(system), qh_norm_block(system, point.k))
        logger.info("inf-sup K=%s h=2^-%s: %.3f", point.k, point.h_exponent, beta)
        return GridResult(point=point, value=beta)

    system, precond = _preconditioned(config, point)
    metadata = {"K": point.k, "h": 2.0 ** -point.h_exponent, "theta": point.theta}
    report = condition_number(system, precond, metadata=metadata)
    result = GridResult(point=point, value=report.cond, n_filtered_null=report.n_filtered_null)

    if config.minres:
        matrix = system.matrix() if isinstance(system, AssembledSaddleSystem) else system
        rhs = matrix @ np.ones(matrix.shape[0])
        run = minres(matrix, precond, rhs, rtol=config.minres_rtol, maxit=config.minres_maxit)
        result.minres_iterations = run.iterations
        result.minres_converged = run.converged

    logger.info(
        "%s%s K=%s theta=%.3g h=2^-%s: cond %.4g",
        point.preconditioner,
        f" ({point.pressure_mode})" if point.pressure_mode else "",
        point.k,
        point.theta,
        point.h_exponent,
        report.cond,
    )
    return result


async def run_grid(config: ExperimentConfig, progress: bool = True) -> list[GridResult]:
    """Evaluate every grid point with at most ``config.jobs`` running at once.

    Results come back in ``expand_grid`` order whatever the completion order.
    The first failure is logged and re-raised.
    """
    points = expand_grid(config)
    sem = asyncio.Semaphore(config.jobs)

    async def _task(point: GridPoint) -> GridResult:
        async with sem:
            try:
                return await asyncio.to_thread(evaluate_point, config, point)
            except Exception:
                logger.exception("Grid point %s failed", point)
                raise

    logger.info("Running %s: %s grid points on %s worker(s)", config.experiment, len(points), config.jobs)
    return await tqdm_asyncio.gather(*[_task(p) for p in points], desc=config.experiment, disable=not progress)


def run_experiment(
    config: ExperimentConfig, out: Optional[Path] = None, progress: bool = True
) -> tuple[list[GridResult], Path]:
    """Run the sweep and write the rendered table; returns the results and the output path."""
    results = asyncio.run(run_grid(config, progress=progress))
    text = render(config, results)
    path = Path(out) if out is not None else default_output_path(config.experiment, config.output_format)
    write_text(path, text)
    return results, path
