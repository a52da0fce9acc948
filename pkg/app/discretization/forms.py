"""Bilinear forms of the mixed Darcy and simplified Biot problems.

Every ``assemble_*`` function returns the full (unconstrained) CSR matrix over the
dof maps it is given; ``AssembledSaddleSystem`` holds the blocks after symmetric
elimination of the essential dofs, which is what preconditioners and spectra see.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Optional

import numpy as np
import scipy.sparse as sps

from app.linalg import coo_assemble, factor_spd, to_dense
from app.trace.logger import logger
from app.utils import BOUNDARY_TAGS

from .conductivity import (
    ConductivityField,
    ConstantConductivity,
    JumpConductivity,
    cell_scalars,
    facet_harmonic_means,
    inverse_cell_values,
    is_scalar,
)
from .mesh import Mesh
from .spaces import DofMap, build_dofmap, reference_basis

BIOT_DIRICHLET_TAGS = ("left", "right", "bottom")


# ---------------------------------------------------------------------------
# Assembly helpers
# ---------------------------------------------------------------------------

def _assemble_local(local: np.ndarray, rows: DofMap, cols: DofMap) -> sps.csr_matrix:
    """Scatter (nc, nr, nc') cell matrices, oriented by the dof signs, into a global CSR."""
    if len(rows.cell_dofs) != len(local) or len(cols.cell_dofs) != len(local):
        raise ValueError("dof maps and cell matrices do not live on the same mesh")
    oriented = rows.cell_signs[:, :, None] * local * cols.cell_signs[:, None, :]
    r = np.broadcast_to(rows.cell_dofs[:, :, None], local.shape)
    c = np.broadcast_to(cols.cell_dofs[:, None, :], local.shape)
    return coo_assemble(r, c, oriented, (rows.total_dofs, cols.total_dofs))


def _local_basis(mesh: Mesh, dofmap: DofMap):
    # orientation is applied when scattering, so evaluate with local outward signs
    return reference_basis(dofmap.kind, mesh.cell_coordinates)


def eliminate(matrix: sps.spmatrix, rows: DofMap, cols: DofMap) -> sps.csr_matrix:
    """Drop constrained rows and columns (homogeneous essential conditions)."""
    return sps.csr_matrix(matrix)[rows.free_dofs][:, cols.free_dofs]


# ---------------------------------------------------------------------------
# Forms
# ---------------------------------------------------------------------------

def assemble_velocity_mass(
    mesh: Mesh, rt0: DofMap, field: Optional[ConductivityField] = None
) -> sps.csr_matrix:
    """(K^-1 u, v) on RT0; unweighted when ``field`` is None."""
    basis = _local_basis(mesh, rt0)
    if field is None:
        kinv = np.broadcast_to(np.eye(2), (mesh.num_cells, 2, 2))
    else:
        kinv = inverse_cell_values(field, mesh)
    local = np.einsum("cq,cab,cqib,cqja->cij", basis.weights, kinv, basis.values, basis.values)
    return _assemble_local(local, rt0, rt0)


def assemble_div(mesh: Mesh, rt0: DofMap, p0: DofMap) -> sps.csr_matrix:
    """(div u, q): pressure rows by flux columns, entries +-|e|."""
    basis = _local_basis(mesh, rt0)
    local = np.einsum("cq,cqi->ci", basis.weights, basis.divergence)[:, None, :]
    return _assemble_local(local, p0, rt0)


def assemble_divdiv(
    mesh: Mesh, rt0: DofMap, weight: Optional[ConductivityField] = None
) -> sps.csr_matrix:
    """(div u, div v), or (div(K^-1 u), div v) when ``weight`` is given."""
    basis = _local_basis(mesh, rt0)
    if weight is None:
        weighted_div = basis.divergence
    else:
        kinv = inverse_cell_values(weight, mesh)
        weighted_div = np.einsum("cab,cqjba->cqj", kinv, basis.gradients)
    local = np.einsum("cq,cqj,cqi->cij", basis.weights, weighted_div, basis.divergence)
    local = 0.5 * (local + np.swapaxes(local, 1, 2))
    return _assemble_local(local, rt0, rt0)


def assemble_p0_mass(mesh: Mesh, p0: DofMap, field: Optional[ConductivityField] = None) -> sps.csr_matrix:
    """Diagonal P0 mass |T|, optionally weighted by the per-cell scalar conductivity."""
    diagonal = mesh.cell_areas.copy()
    if field is not None:
        diagonal *= cell_scalars(field, mesh)
    return sps.diags(diagonal).tocsr()


def assemble_dg_laplacian(
    mesh: Mesh, p0: DofMap, field: ConductivityField, dirichlet_tags: Iterable[str] = ()
) -> sps.csr_matrix:
    """Interior-penalty Laplacian on P0 with harmonic-mean conductivity on interior facets.

    Interior facet: |e| / avg(h) / avg(K^-1) [p][q]; Dirichlet facet: |e| K_T / h_T p q.
    The volume term vanishes for piecewise constants.
    """
    if not is_scalar(field):
        raise TypeError("the DG Laplacian takes scalar conductivities; use the exact Schur complement for tensors")
    interior = mesh.interior_edges
    plus, minus = mesh.edge_to_cells[interior].T
    avg_h = 0.5 * (mesh.cell_diameters[plus] + mesh.cell_diameters[minus])
    w = mesh.edge_lengths[interior] * facet_harmonic_means(field, mesh) / avg_h

    dirichlet = mesh.edges_with_tags(dirichlet_tags)
    owner = mesh.edge_to_cells[dirichlet, 0]
    k = cell_scalars(field, mesh)
    wd = mesh.edge_lengths[dirichlet] * k[owner] / mesh.cell_diameters[owner]

    dof = p0.cell_dofs[:, 0]
    rows = np.concatenate([dof[plus], dof[minus], dof[plus], dof[minus], dof[owner]])
    cols = np.concatenate([dof[plus], dof[minus], dof[minus], dof[plus], dof[owner]])
    vals = np.concatenate([w, w, -w, -w, wd])
    return coo_assemble(rows, cols, vals, (p0.total_dofs, p0.total_dofs))


def assemble_elasticity(mesh: Mesh, p2: DofMap) -> sps.csr_matrix:
    """(2 eps(u), eps(v)) on vector P2."""
    basis = _local_basis(mesh, p2)
    eps = 0.5 * (basis.gradients + np.swapaxes(basis.gradients, -1, -2))
    local = 2.0 * np.einsum("cq,cqiab,cqjab->cij", basis.weights, eps, eps)
    return _assemble_local(local, p2, p2)


def assemble_coupling(mesh: Mesh, velocity: DofMap, p0: DofMap) -> sps.csr_matrix:
    """(div w, q) for a displacement (P2vec) or flux (RT0) space."""
    if velocity.kind == "RT0":
        return assemble_div(mesh, velocity, p0)
    if velocity.kind != "P2vec":
        raise ValueError(f"no divergence coupling for {velocity.kind}")
    basis = _local_basis(mesh, velocity)
    local = np.einsum("cq,cqi->ci", basis.weights, basis.divergence)[:, None, :]
    return _assemble_local(local, p0, velocity)


# ---------------------------------------------------------------------------
# Saddle systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AssembledSaddleSystem:
    """Eliminated blocks of a saddle-point operator.

    Darcy blocks: ``auu`` = (K^-1 u, v), ``bdiv`` = (div u, q).
    Biot blocks: ``ae`` = (2 eps, eps), ``mv`` = (K^-1 v, w), ``be``/``bv`` = -(div ., q).
    """

    problem: Literal["darcy", "biot"]
    mesh: Mesh
    field: ConductivityField
    dofmaps: dict[str, DofMap]
    blocks: dict[str, sps.csr_matrix]
    pressure_dirichlet_tags: tuple[str, ...]

    @property
    def fields(self) -> tuple[str, ...]:
        if self.problem == "darcy":
            return ("flux", "pressure")
        return ("displacement", "flux", "pressure")

    @property
    def block_sizes(self) -> list[int]:
        return [self.dofmaps[name].num_free for name in self.fields]

    @property
    def size(self) -> int:
        return sum(self.block_sizes)

    @property
    def expected_kernel_dim(self) -> int:
        """Constant pressures are in the kernel iff no boundary carries a pressure condition."""
        return 1 if self.problem == "darcy" and not self.pressure_dirichlet_tags else 0

    @property
    def pressure_nullspace(self) -> Optional[np.ndarray]:
        if not self.expected_kernel_dim:
            return None
        n = self.dofmaps["pressure"].num_free
        return np.full(n, 1.0 / np.sqrt(n))

    def eliminate(self, matrix: sps.spmatrix, row_field: str, col_field: str) -> sps.csr_matrix:
        return eliminate(matrix, self.dofmaps[row_field], self.dofmaps[col_field])

    def matrix(self) -> sps.csr_matrix:
        b = self.blocks
        if self.problem == "darcy":
            layout = [[b["auu"], b["bdiv"].T], [b["bdiv"], None]]
        else:
            layout = [
                [b["ae"], None, b["be"].T],
                [None, b["mv"], b["bv"].T],
                [b["be"], b["bv"], None],
            ]
        return sps.bmat(layout, format="csr")


def build_darcy_system(
    mesh: Mesh, field: ConductivityField, essential_tags: Iterable[str] = BOUNDARY_TAGS
) -> AssembledSaddleSystem:
    """RT0 x P0 discretization of the mixed Darcy problem, flux fixed on ``essential_tags``."""
    if isinstance(field, JumpConductivity) and mesh.n_subdivisions % 2:
        raise ValueError("jump conductivity needs an even N so that x = 1/2 is a mesh line")
    essential_tags = tuple(sorted(set(essential_tags)))
    flux = build_dofmap(mesh, "RT0", essential_tags)
    pressure = build_dofmap(mesh, "P0")
    dofmaps = {"flux": flux, "pressure": pressure}
    blocks = {
        "auu": eliminate(assemble_velocity_mass(mesh, flux, field), flux, flux),
        "bdiv": eliminate(assemble_div(mesh, flux, pressure), pressure, flux),
    }
    system = AssembledSaddleSystem(
        problem="darcy",
        mesh=mesh,
        field=field,
        dofmaps=dofmaps,
        blocks=blocks,
        pressure_dirichlet_tags=tuple(t for t in BOUNDARY_TAGS if t not in essential_tags),
    )
    logger.debug("Darcy system N=%s %s: sizes %s", mesh.n_subdivisions, field.kind, system.block_sizes)
    return system


def build_biot_system(mesh: Mesh, K: float) -> AssembledSaddleSystem:
    """P2vec x RT0 x P0 simplified Biot system; displacement and flux fixed on left/right/bottom."""
    field = ConstantConductivity(K=K)
    displacement = build_dofmap(mesh, "P2vec", BIOT_DIRICHLET_TAGS)
    flux = build_dofmap(mesh, "RT0", BIOT_DIRICHLET_TAGS)
    pressure = build_dofmap(mesh, "P0")
    blocks = {
        "ae": eliminate(assemble_elasticity(mesh, displacement), displacement, displacement),
        "mv": eliminate(assemble_velocity_mass(mesh, flux, field), flux, flux),
        "be": -eliminate(assemble_coupling(mesh, displacement, pressure), pressure, displacement),
        "bv": -eliminate(assemble_coupling(mesh, flux, pressure), pressure, flux),
    }
    system = AssembledSaddleSystem(
        problem="biot",
        mesh=mesh,
        field=field,
        dofmaps={"displacement": displacement, "flux": flux, "pressure": pressure},
        blocks=blocks,
        pressure_dirichlet_tags=tuple(t for t in BOUNDARY_TAGS if t not in BIOT_DIRICHLET_TAGS),
    )
    logger.debug("Biot system N=%s K=%s: sizes %s", mesh.n_subdivisions, K, system.block_sizes)
    return system


# ---------------------------------------------------------------------------
# Discrete gradient and the norms built on it
# ---------------------------------------------------------------------------

def unweighted_flux_mass(system: AssembledSaddleSystem) -> sps.csr_matrix:
    flux = system.dofmaps["flux"]
    return eliminate(assemble_velocity_mass(system.mesh, flux), flux, flux)


def divergence_block(system: AssembledSaddleSystem) -> sps.csr_matrix:
    """(div u, q) on the eliminated flux space, whatever the sign convention of the system."""
    flux, pressure = system.dofmaps["flux"], system.dofmaps["pressure"]
    return eliminate(assemble_div(system.mesh, flux, pressure), pressure, flux)


def discrete_gradient(system: AssembledSaddleSystem) -> np.ndarray:
    """Matrix of grad_h: (grad_h q, v) = -(q, div v), i.e. G = -M^-1 B^T."""
    mass = factor_spd(unweighted_flux_mass(system), label="RT0 mass")
    return -mass.solve(to_dense(divergence_block(system).T))


def discrete_h1_matrix(system: AssembledSaddleSystem) -> np.ndarray:
    """B M^-1 B^T, the matrix of |q|_{1,h}^2 = |grad_h q|^2 (= -div grad_h)."""
    b = divergence_block(system)
    gradient = discrete_gradient(system)
    h1 = -to_dense(b @ gradient)
    return 0.5 * (h1 + h1.T)
