"""Degree-of-freedom maps and basis evaluation for RT0, P0 and vector P2.

All evaluation routines accept cell coordinates of shape ``(..., 3, 2)`` so the
same code serves a single cell and the whole mesh at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Literal, Optional

import numpy as np

from .mesh import Mesh

SpaceKind = Literal["RT0", "P0", "P2vec"]

# 3-point rule on the reference triangle, exact for quadratics (reference area 1/2)
QUAD_POINTS = np.array([[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]])
QUAD_WEIGHTS = np.full(3, 1.0 / 6.0)

_REF_GRAD_LAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class DofMap:
    kind: SpaceKind
    total_dofs: int
    cell_dofs: np.ndarray        # (nc, nloc)
    cell_signs: np.ndarray       # (nc, nloc)
    constrained_dofs: np.ndarray # sorted

    @cached_property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.total_dofs, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.flatnonzero(mask)

    @property
    def num_free(self) -> int:
        return self.total_dofs - len(self.constrained_dofs)


def build_dofmap(mesh: Mesh, kind: SpaceKind, essential_bc: Iterable[str] = ()) -> DofMap:
    """Number the dofs of ``kind`` on ``mesh`` and collect those on ``essential_bc`` edges."""
    essential_bc = sorted(set(essential_bc))
    tagged_edges = mesh.edges_with_tags(essential_bc)

    if kind == "RT0":
        return DofMap(
            kind=kind,
            total_dofs=mesh.num_edges,
            cell_dofs=mesh.cell_to_edges.copy(),
            cell_signs=mesh.cell_edge_signs.astype(float),
            constrained_dofs=tagged_edges,
        )

    if kind == "P0":
        if essential_bc:
            raise ValueError("P0 pressures carry no essential boundary conditions")
        return DofMap(
            kind=kind,
            total_dofs=mesh.num_cells,
            cell_dofs=np.arange(mesh.num_cells)[:, None],
            cell_signs=np.ones((mesh.num_cells, 1)),
            constrained_dofs=np.empty(0, dtype=np.int64),
        )

    if kind == "P2vec":
        nv = mesh.num_vertices
        nodes = np.hstack([mesh.cells, nv + mesh.cell_to_edges])  # (nc, 6)
        cell_dofs = np.empty((mesh.num_cells, 12), dtype=np.int64)
        cell_dofs[:, 0::2] = 2 * nodes
        cell_dofs[:, 1::2] = 2 * nodes + 1
        bc_nodes = np.union1d(np.unique(mesh.edges[tagged_edges]), nv + tagged_edges)
        constrained = np.sort(np.concatenate([2 * bc_nodes, 2 * bc_nodes + 1]))
        return DofMap(
            kind=kind,
            total_dofs=2 * (nv + mesh.num_edges),
            cell_dofs=cell_dofs,
            cell_signs=np.ones((mesh.num_cells, 12)),
            constrained_dofs=constrained.astype(np.int64),
        )

    raise ValueError(f"unknown space kind {kind!r}")


# ---------------------------------------------------------------------------
# Basis evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BasisEvaluation:
    """Basis data at the quadrature points; leading axes follow the cell input."""

    points: np.ndarray                   # (..., nq, 2)
    weights: np.ndarray                  # (..., nq), include |det J|
    values: np.ndarray                   # RT0/P2vec (..., nq, nloc, 2); P0 (..., nq, 1)
    divergence: Optional[np.ndarray]     # (..., nq, nloc)
    gradients: Optional[np.ndarray]      # (..., nq, nloc, 2, 2), [component, derivative]


def _affine(cell_vertices: np.ndarray):
    p = np.asarray(cell_vertices, dtype=float)
    jac = np.stack([p[..., 1, :] - p[..., 0, :], p[..., 2, :] - p[..., 0, :]], axis=-1)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(np.abs(det) < 1e-300):
        raise ValueError("degenerate cell")
    return p, jac, det


def quadrature(cell_vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Physical quadrature points and weights of the 3-point rule."""
    p, jac, det = _affine(cell_vertices)
    points = p[..., 0, :][..., None, :] + np.einsum("...ij,qj->...qi", jac, QUAD_POINTS)
    weights = np.abs(det)[..., None] * QUAD_WEIGHTS
    return points, weights


def rt0_coefficients(cell_vertices: np.ndarray, signs: Optional[np.ndarray] = None) -> np.ndarray:
    """``s_k |e_k| / (2|T|)`` so that phi_k = coef_k (x - p_k) has unit normal trace on edge k."""
    p, _, det = _affine(cell_vertices)
    lengths = np.linalg.norm(p[..., [2, 0, 1], :] - p[..., [1, 2, 0], :], axis=-1)
    coef = lengths / np.abs(det)[..., None]
    if signs is not None:
        coef = coef * signs
    return coef


def evaluate_rt0(cell_vertices: np.ndarray, signs: Optional[np.ndarray], points: np.ndarray) -> np.ndarray:
    """RT0 basis values (..., npts, 3, 2) at arbitrary physical points of the cell(s)."""
    p = np.asarray(cell_vertices, dtype=float)
    coef = rt0_coefficients(p, signs)
    offset = points[..., :, None, :] - p[..., None, :, :]
    return coef[..., None, :, None] * offset


def _barycentric_gradients(jac: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(jac)
    return np.einsum("...ji,kj->...ki", inv, _REF_GRAD_LAMBDA)  # (..., 3, 2)


def _p2_scalar(grad_lambda: np.ndarray):
    lam = np.column_stack([1.0 - QUAD_POINTS.sum(axis=1), QUAD_POINTS[:, 0], QUAD_POINTS[:, 1]])
    nq = len(lam)
    values = np.empty((nq, 6))
    grads = np.empty(grad_lambda.shape[:-2] + (nq, 6, 2))
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        values[:, k] = lam[:, k] * (2.0 * lam[:, k] - 1.0)
        values[:, 3 + k] = 4.0 * lam[:, a] * lam[:, b]
        grads[..., k, :] = (4.0 * lam[:, k] - 1.0)[:, None] * grad_lambda[..., None, k, :]
        grads[..., 3 + k, :] = 4.0 * (
            lam[:, a][:, None] * grad_lambda[..., None, b, :]
            + lam[:, b][:, None] * grad_lambda[..., None, a, :]
        )
    return values, grads


def reference_basis(
    kind: SpaceKind, cell_vertices: np.ndarray, signs: Optional[np.ndarray] = None
) -> BasisEvaluation:
    """Evaluate the basis of ``kind`` at the quadrature points of the given cell(s).

    ``signs`` orients RT0 functions to the global edge normals; without it the
    local (outward) orientation is used.
    """
    p, jac, det = _affine(cell_vertices)
    points, weights = quadrature(p)
    nq = len(QUAD_WEIGHTS)

    if kind == "RT0":
        coef = rt0_coefficients(p, signs)
        values = evaluate_rt0(p, signs, points)
        divergence = np.broadcast_to(2.0 * coef[..., None, :], points.shape[:-1] + (3,)).copy()
        gradients = coef[..., None, :, None, None] * np.eye(2)
        gradients = np.broadcast_to(gradients, points.shape[:-1] + (3, 2, 2)).copy()
        return BasisEvaluation(points, weights, values, divergence, gradients)

    if kind == "P0":
        values = np.ones(points.shape[:-1] + (1,))
        return BasisEvaluation(points, weights, values, None, None)

    if kind == "P2vec":
        scalar, scalar_grads = _p2_scalar(_barycentric_gradients(jac))
        lead = points.shape[:-2]
        values = np.zeros(lead + (nq, 12, 2))
        gradients = np.zeros(lead + (nq, 12, 2, 2))
        for a in range(6):
            for c in range(2):
                values[..., 2 * a + c, c] = scalar[:, a]
                gradients[..., 2 * a + c, c, :] = scalar_grads[..., a, :]
        divergence = np.trace(gradients, axis1=-2, axis2=-1)
        return BasisEvaluation(points, weights, values, divergence, gradients)

    raise ValueError(f"unknown space kind {kind!r}")

