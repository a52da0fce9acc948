"""Condition numbers, inf-sup constants and MINRES runs for preconditioned saddle systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from app.discretization.forms import AssembledSaddleSystem
from app.errors import AsymmetricOperatorError, KernelDimensionError, LabError, NotPositiveDefiniteError
from app.linalg import Matrix, factor_spd, generalized_eigs, symmetry_defect, to_dense
from app.trace.logger import logger

from .precond import BlockPreconditioner, SumOfInverses

NULL_THRESHOLD = 1e-10
SYMMETRY_TOLERANCE = 1e-8

SystemLike = Union[AssembledSaddleSystem, Matrix]


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    n_filtered_null: int
    lambda_min_abs: float
    lambda_max_abs: float
    metadata: dict = field(default_factory=dict)

    @property
    def cond(self) -> float:
        return self.lambda_max_abs / self.lambda_min_abs


@dataclass
class MinresResult:
    solution: np.ndarray
    iterations: int
    converged: bool
    residual_reduction: float = float("nan")


def _system_matrix(system: SystemLike) -> Matrix:
    if isinstance(system, AssembledSaddleSystem):
        return system.matrix()
    return system


def _require_symmetric(matrix: Matrix, label: str, tolerance: float = SYMMETRY_TOLERANCE) -> None:
    defect = symmetry_defect(matrix)
    if defect > tolerance:
        raise AsymmetricOperatorError(f"{label} is not symmetric (relative defect {defect:.2e})")


def condition_number(
    system: SystemLike,
    precond: BlockPreconditioner,
    expected_kernel: Optional[int] = None,
    metadata: Optional[dict] = None,
) -> SpectrumReport:
    """Spectrum of B A from the generalized problem A x = lambda N x, N = B^-1.

    Modes with |lambda| <= 1e-10 max|lambda| are dropped; their number must equal
    ``expected_kernel`` (the system's analytic kernel dimension by default).
    """
    matrix = _system_matrix(system)
    if expected_kernel is None:
        expected_kernel = system.expected_kernel_dim if isinstance(system, AssembledSaddleSystem) else 0
    if matrix.shape[0] != precond.size:
        raise ValueError(f"system of size {matrix.shape[0]} with a preconditioner of size {precond.size}")

    a = to_dense(matrix)
    n = precond.norm_matrix()
    _require_symmetric(a, "system matrix")
    _require_symmetric(n, f"{precond.name} norm matrix")

    eigenvalues = generalized_eigs(a, n)
    magnitude = np.abs(eigenvalues)
    null = magnitude <= NULL_THRESHOLD * magnitude.max()
    n_null = int(null.sum())
    label = f"{precond.name} {metadata or ''}".strip()
    if n_null != expected_kernel:
        logger.warning("Kernel mismatch for %s: %s null modes, expected %s", label, n_null, expected_kernel)
        raise KernelDimensionError(n_null, expected_kernel, label)

    kept = magnitude[~null]
    report = SpectrumReport(
        eigenvalues=eigenvalues,
        n_filtered_null=n_null,
        lambda_min_abs=float(kept.min()),
        lambda_max_abs=float(kept.max()),
        metadata={"preconditioner": precond.name, **precond.metadata, **(metadata or {})},
    )
    logger.debug("cond(%s) = %.4g over %s eigenvalues", label, report.cond, len(kept))
    return report


def infsup_constant(
    system: AssembledSaddleSystem,
    velocity_norm: Matrix,
    pressure_norm: Union[SumOfInverses, Matrix],
) -> float:
    """beta = sqrt(min mu) for (B Nu^-1 B^T) x = mu Np x, constant pressures excluded.

    ``pressure_norm`` is either the norm matrix Np or a preconditioner block whose
    inverse it is.
    """
    b = system.blocks["bdiv"]
    nu = factor_spd(velocity_norm, label="velocity norm")
    schur = to_dense(b @ nu.solve(to_dense(b.T)))
    schur = 0.5 * (schur + schur.T)
    if hasattr(pressure_norm, "norm_matrix"):
        np_matrix = pressure_norm.norm_matrix()
    else:
        np_matrix = to_dense(pressure_norm)

    mu = generalized_eigs(schur, np_matrix)
    kernel = system.expected_kernel_dim
    if kernel and abs(mu[kernel - 1]) > NULL_THRESHOLD * abs(mu).max():
        raise KernelDimensionError(0, kernel, "inf-sup")
    beta = float(np.sqrt(mu[kernel]))
    logger.debug("inf-sup N=%s: beta = %.4g", system.mesh.n_subdivisions, beta)
    return beta


def minres(
    system: SystemLike,
    precond: BlockPreconditioner,
    rhs: np.ndarray,
    rtol: float = 1e-8,
    maxit: int = 1500,
) -> MinresResult:
    """Preconditioned MINRES from a zero initial guess.

    Stops once the preconditioned residual sqrt(r . B r) has dropped by ``rtol``
    relative to that of ``rhs``. The norm comes out of the Givens recurrence, so
    no extra products are spent on it. Hitting ``maxit`` is reported through
    ``converged``.
    """
    matrix = _system_matrix(system)
    _require_symmetric(matrix, "MINRES system", tolerance=1e-10)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] != precond.size or rhs.shape != (precond.size,):
        raise ValueError(f"system {matrix.shape}, rhs {rhs.shape} and preconditioner of size {precond.size}")

    solution = np.zeros_like(rhs)
    v = rhs.copy()
    z = precond.apply(v)
    gamma = _preconditioned_norm(z, v, precond.name)
    if gamma == 0.0:
        return MinresResult(solution=solution, iterations=0, converged=True, residual_reduction=0.0)

    initial = gamma
    eta = gamma
    gamma_old = 1.0
    v_old = np.zeros_like(rhs)
    w, w_old = np.zeros_like(rhs), np.zeros_like(rhs)
    c, c_old, s, s_old = 1.0, 1.0, 0.0, 0.0

    iterations = 0
    while iterations < maxit:
        iterations += 1
        z = z / gamma
        az = matrix @ z
        delta = float(az @ z)
        v_new = az - (delta / gamma) * v - (gamma / gamma_old) * v_old
        z_new = precond.apply(v_new)
        gamma_new = _preconditioned_norm(z_new, v_new, precond.name, scale=initial)

        # QR of the tridiagonal Lanczos matrix, one Givens rotation per step
        alpha0 = c * delta - c_old * s * gamma
        alpha1 = np.hypot(alpha0, gamma_new)
        if alpha1 == 0.0:
            raise LabError(f"MINRES broke down with {precond.name} after {iterations} iterations")
        alpha2 = s * delta + c_old * c * gamma
        alpha3 = s_old * gamma
        c_old, s_old = c, s
        c, s = alpha0 / alpha1, gamma_new / alpha1

        w_new = (z - alpha3 * w_old - alpha2 * w) / alpha1
        solution += c * eta * w_new
        eta = -s * eta

        w_old, w = w, w_new
        v_old, v = v, v_new
        gamma_old, gamma = gamma, gamma_new
        z = z_new

        if abs(eta) <= rtol * initial:
            return MinresResult(
                solution=solution, iterations=iterations, converged=True, residual_reduction=abs(eta) / initial
            )

    logger.warning("MINRES with %s stopped at maxit=%s", precond.name, maxit)
    return MinresResult(solution=solution, iterations=iterations, converged=False, residual_reduction=abs(eta) / initial)


def _preconditioned_norm(z: np.ndarray, v: np.ndarray, label: str, scale: float = 0.0) -> float:
    """sqrt(v . B v) given z = B v; round-off negatives near zero are clipped."""
    squared = float(z @ v)
    if squared < -1e-12 * scale * scale:
        raise NotPositiveDefiniteError(f"{label} is not positive definite (v.Bv = {squared:.3e})")
    return float(np.sqrt(max(squared, 0.0)))
