"""Block-diagonal preconditioners for the Darcy and simplified Biot systems.

A preconditioner is a list of blocks, each either the inverse of a norm matrix
(``InverseOf``) or a sum of inverses (``SumOfInverses``, the I^-1 + (-K Lap)^-1
pressure blocks). Blocks are realized densely: exact inversion at desk scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from app.discretization.conductivity import (
    ConstantConductivity,
    TensorConductivity,
    is_scalar,
    tensor_pressure_scalar,
)
from app.discretization.forms import (
    AssembledSaddleSystem,
    assemble_dg_laplacian,
    assemble_divdiv,
    assemble_p0_mass,
    assemble_velocity_mass,
    discrete_h1_matrix,
    unweighted_flux_mass,
)
from app.linalg import Matrix, deflated_inverse, factor_spd, to_dense
from app.trace.logger import logger

PressureMode = Literal["dg", "scaled_dg", "exact_schur"]
DARCY_PRECONDITIONERS = ("B1", "B2")
BIOT_PRECONDITIONERS = ("B1", "B2", "B1K", "B2K")


@dataclass(frozen=True, eq=False)
class InverseOf:
    matrix: Matrix
    label: str = ""

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def factor(self):
        return factor_spd(self.matrix, label=self.label or "preconditioner block")

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.factor.solve(v)

    def norm_matrix(self) -> np.ndarray:
        return to_dense(self.matrix)


@dataclass(frozen=True, eq=False)
class SumOfInverses:
    """sum_i M_i^-1, where M_i^-1 is a pseudoinverse if ``nullspaces[i]`` spans ker M_i."""

    matrices: tuple[Matrix, ...]
    nullspaces: tuple[Optional[np.ndarray], ...] = ()
    label: str = ""

    @property
    def size(self) -> int:
        return self.matrices[0].shape[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        nullspaces = self.nullspaces or (None,) * len(self.matrices)
        total = sum(deflated_inverse(m, z) for m, z in zip(self.matrices, nullspaces))
        return 0.5 * (total + total.T)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.inverse @ v

    def norm_matrix(self) -> np.ndarray:
        return factor_spd(self.inverse, label=self.label or "sum of inverses").inverse()


Block = Union[InverseOf, SumOfInverses]


@dataclass(frozen=True, eq=False)
class BlockPreconditioner:
    name: str
    blocks: tuple[Block, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def sizes(self) -> list[int]:
        return [block.size for block in self.blocks]

    @property
    def size(self) -> int:
        return sum(self.sizes)

    def apply(self, v: np.ndarray) -> np.ndarray:
        offsets = np.cumsum([0] + self.sizes)
        return np.concatenate(
            [block.apply(v[lo:hi]) for block, lo, hi in zip(self.blocks, offsets[:-1], offsets[1:])]
        )

    def norm_matrix(self) -> np.ndarray:
        """Dense block diagonal N with B = N^-1."""
        return sla.block_diag(*(block.norm_matrix() for block in self.blocks))

    def check_spd(self) -> None:
        """Raise NotPositiveDefiniteError unless every block's norm matrix is SPD."""
        for block in self.blocks:
            factor_spd(block.norm_matrix(), label=block.label or self.name)


def _check_sizes(system: AssembledSaddleSystem, precond: BlockPreconditioner) -> BlockPreconditioner:
    if precond.sizes != system.block_sizes:
        raise ValueError(f"block sizes {precond.sizes} do not match the system {system.block_sizes}")
    return precond


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------

def _flux_divdiv(system: AssembledSaddleSystem, weight=None) -> sps.csr_matrix:
    flux = system.dofmaps["flux"]
    return system.eliminate(assemble_divdiv(system.mesh, flux, weight), "flux", "flux")


def _pressure_mass(system: AssembledSaddleSystem, field=None) -> sps.csr_matrix:
    pressure = system.dofmaps["pressure"]
    return system.eliminate(assemble_p0_mass(system.mesh, pressure, field), "pressure", "pressure")


def exact_schur_complement(system: AssembledSaddleSystem) -> np.ndarray:
    """B (K^-1 mass)^-1 B^T, the exact pressure Schur complement of the Darcy block."""
    b = system.blocks["bdiv"]
    auu = factor_spd(system.blocks["auu"], label="weighted RT0 mass")
    schur = b @ auu.solve(to_dense(b.T))
    return 0.5 * (schur + schur.T)


def vh_norm_matrix(system: AssembledSaddleSystem) -> sps.csr_matrix:
    """(K^-1 u, v) + (div u, div v): the K-weighted H(div) flux norm."""
    return system.blocks["auu"] + _flux_divdiv(system)


def qh_norm_block(system: AssembledSaddleSystem, K: float) -> SumOfInverses:
    """Riesz map of the discrete L^2 + K^(1/2) H^1_h pressure norm: I^-1 + (K B M^-1 B^T)^-1."""
    return SumOfInverses(
        matrices=(_pressure_mass(system), K * discrete_h1_matrix(system)),
        nullspaces=(None, system.pressure_nullspace),
        label="Q_h norm",
    )


# ---------------------------------------------------------------------------
# Darcy
# ---------------------------------------------------------------------------

def darcy_B1(system: AssembledSaddleSystem) -> BlockPreconditioner:
    """[(K^-1 I - grad div K^-1)^-1, (K I)^-1]; the pressure scale is k for tensors."""
    field_ = system.field
    flux = system.dofmaps["flux"]
    velocity = system.eliminate(assemble_velocity_mass(system.mesh, flux, field_), "flux", "flux")
    velocity = velocity + _flux_divdiv(system, weight=field_)
    if is_scalar(field_):
        pressure = _pressure_mass(system, field_)
    else:
        pressure = tensor_pressure_scalar(field_) * _pressure_mass(system)
    precond = BlockPreconditioner(
        name="B1",
        blocks=(InverseOf(velocity, "B1 flux"), InverseOf(pressure, "B1 pressure")),
        metadata={"pressure_mode": "mass"},
    )
    return _check_sizes(system, precond)


def darcy_B2(system: AssembledSaddleSystem, pressure_mode: PressureMode = "dg") -> BlockPreconditioner:
    """[(K^-1 I - grad div)^-1, I^-1 + S^-1] with S from ``pressure_mode``.

    ``dg``: harmonic-mean DG Laplacian (scalar fields); ``scaled_dg``: k times the
    unit DG Laplacian (tensor fields); ``exact_schur``: B (K^-1 mass)^-1 B^T.
    """
    field_ = system.field
    velocity = vh_norm_matrix(system)
    pressure_dofs = system.dofmaps["pressure"]

    if pressure_mode == "dg":
        if not is_scalar(field_):
            raise ValueError("dg pressure mode needs a scalar conductivity; use scaled_dg or exact_schur")
        laplacian = assemble_dg_laplacian(system.mesh, pressure_dofs, field_, system.pressure_dirichlet_tags)
        schur = system.eliminate(laplacian, "pressure", "pressure")
    elif pressure_mode == "scaled_dg":
        if not isinstance(field_, TensorConductivity):
            raise ValueError("scaled_dg pressure mode is defined for tensor conductivities")
        unit = ConstantConductivity(K=1.0)
        laplacian = assemble_dg_laplacian(system.mesh, pressure_dofs, unit, system.pressure_dirichlet_tags)
        schur = tensor_pressure_scalar(field_) * system.eliminate(laplacian, "pressure", "pressure")
    elif pressure_mode == "exact_schur":
        schur = exact_schur_complement(system)
    else:
        raise ValueError(f"unknown pressure mode {pressure_mode!r}")

    pressure = SumOfInverses(
        matrices=(_pressure_mass(system), schur),
        nullspaces=(None, system.pressure_nullspace),
        label=f"B2 pressure ({pressure_mode})",
    )
    precond = BlockPreconditioner(
        name="B2",
        blocks=(InverseOf(velocity, "B2 flux"), pressure),
        metadata={"pressure_mode": pressure_mode},
    )
    return _check_sizes(system, precond)


# ---------------------------------------------------------------------------
# Biot
# ---------------------------------------------------------------------------

def _biot(system: AssembledSaddleSystem, name: str, scale_divdiv: bool, scale_pressure: bool) -> BlockPreconditioner:
    if system.problem != "biot":
        raise ValueError(f"{name} preconditions the Biot system, got {system.problem}")
    K = system.field.K
    mass = unweighted_flux_mass(system)
    divdiv = _flux_divdiv(system)
    flux = (mass + divdiv) / K if scale_divdiv else mass / K + divdiv
    pressure = _pressure_mass(system)
    if scale_pressure:
        pressure = K * pressure
    precond = BlockPreconditioner(
        name=name,
        blocks=(
            InverseOf(system.blocks["ae"], f"{name} displacement"),
            InverseOf(flux, f"{name} flux"),
            InverseOf(pressure, f"{name} pressure"),
        ),
    )
    return _check_sizes(system, precond)


def biot_B1(system: AssembledSaddleSystem) -> BlockPreconditioner:
    return _biot(system, "B1", scale_divdiv=True, scale_pressure=False)


def biot_B2(system: AssembledSaddleSystem) -> BlockPreconditioner:
    return _biot(system, "B2", scale_divdiv=False, scale_pressure=False)


def biot_B1K(system: AssembledSaddleSystem) -> BlockPreconditioner:
    return _biot(system, "B1K", scale_divdiv=True, scale_pressure=True)


def biot_B2K(system: AssembledSaddleSystem) -> BlockPreconditioner:
    return _biot(system, "B2K", scale_divdiv=False, scale_pressure=True)


_BIOT = {"B1": biot_B1, "B2": biot_B2, "B1K": biot_B1K, "B2K": biot_B2K}


def build_preconditioner(
    system: AssembledSaddleSystem, name: str, pressure_mode: Optional[PressureMode] = None
) -> BlockPreconditioner:
    """Look a preconditioner up by id for the system's problem."""
    logger.debug("Building %s for %s N=%s", name, system.problem, system.mesh.n_subdivisions)
    if system.problem == "biot":
        if name not in _BIOT:
            raise ValueError(f"unknown Biot preconditioner {name!r}; choose from {BIOT_PRECONDITIONERS}")
        return _BIOT[name](system)
    if name == "B1":
        return darcy_B1(system)
    if name == "B2":
        return darcy_B2(system, pressure_mode or "dg")
    raise ValueError(f"unknown Darcy preconditioner {name!r}; choose from {DARCY_PRECONDITIONERS}")


def qh_norm_matrix(system: AssembledSaddleSystem, K: float) -> np.ndarray:
    """Dense matrix of the discrete Q_h norm, (I^-1 + (K B M^-1 B^T)^-1)^-1."""
    return qh_norm_block(system, K).norm_matrix()
