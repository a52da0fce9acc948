"""Hydraulic conductivity models: constant, jump across x = 1/2, rotated anisotropic tensor."""
from __future__ import annotations

from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .mesh import Mesh


class ConstantConductivity(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant"] = "constant"
    K: float = Field(gt=0.0, le=1.0, description="Spatially constant scalar conductivity.")


class JumpConductivity(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["jump"] = "jump"
    K0: float = Field(gt=0.0, le=1.0, description="Conductivity on x >= 1/2; it is 1 on x < 1/2.")


class TensorConductivity(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["tensor"] = "tensor"
    K0: float = Field(gt=0.0, le=1.0, description="Smaller eigenvalue of the tensor; the other one is 1.")
    theta: float = Field(default=0.0, description="Rotation angle of the principal axes, in radians.")


ConductivityField = Annotated[
    Union[ConstantConductivity, JumpConductivity, TensorConductivity],
    Field(discriminator="kind"),
]


def is_scalar(field: ConductivityField) -> bool:
    return not isinstance(field, TensorConductivity)


def tensor_matrix(K0: float, theta: float) -> np.ndarray:
    """R_theta diag(1, K0) R_theta^T with R_theta a clockwise rotation.

    At theta = pi/4 the unit eigenvalue runs along (1, -1), across the
    lower-left to upper-right cell diagonals of ``build_unit_square``.
    """
    c, s = np.cos(theta), np.sin(theta)
    rotation = np.array([[c, s], [-s, c]])
    return rotation @ np.diag([1.0, K0]) @ rotation.T


def cell_scalars(field: ConductivityField, mesh: Mesh) -> np.ndarray:
    """Per-cell scalar conductivity for the scalar variants."""
    if isinstance(field, ConstantConductivity):
        return np.full(mesh.num_cells, field.K)
    if isinstance(field, JumpConductivity):
        return np.where(mesh.cell_centroids[:, 0] < 0.5, 1.0, field.K0)
    raise TypeError("tensor conductivity has no per-cell scalar value")


def cell_values(field: ConductivityField, mesh: Mesh) -> np.ndarray:
    """(nc, 2, 2) SPD conductivity matrices; scalar variants give K * I."""
    if isinstance(field, TensorConductivity):
        return np.broadcast_to(tensor_matrix(field.K0, field.theta), (mesh.num_cells, 2, 2)).copy()
    return cell_scalars(field, mesh)[:, None, None] * np.eye(2)


def cell_value(field: ConductivityField, mesh: Mesh, cell: int) -> np.ndarray:
    if not 0 <= cell < mesh.num_cells:
        raise IndexError(f"cell {cell} out of range [0, {mesh.num_cells})")
    return cell_values(field, mesh)[cell]


def inverse_cell_values(field: ConductivityField, mesh: Mesh) -> np.ndarray:
    return np.linalg.inv(cell_values(field, mesh))


def harmonic_mean(k_plus: np.ndarray | float, k_minus: np.ndarray | float) -> np.ndarray | float:
    """1 / avg(K^-1)."""
    return 1.0 / (0.5 * (1.0 / np.asarray(k_plus) + 1.0 / np.asarray(k_minus)))


def facet_harmonic_means(field: ConductivityField, mesh: Mesh) -> np.ndarray:
    """Harmonic means on every interior edge, in ``mesh.interior_edges`` order."""
    k = cell_scalars(field, mesh)
    pairs = mesh.edge_to_cells[mesh.interior_edges]
    return harmonic_mean(k[pairs[:, 0]], k[pairs[:, 1]])


def facet_harmonic_mean(field: ConductivityField, mesh: Mesh, edge: int) -> float:
    plus, minus = mesh.edge_to_cells[edge]
    if minus < 0:
        raise ValueError(f"edge {edge} is on the boundary; use the one-sided value there")
    k = cell_scalars(field, mesh)
    return float(harmonic_mean(k[plus], k[minus]))


def tensor_pressure_scalar(field: ConductivityField) -> float:
    """k = 1 / sum_i lambda_i(K)^-1 = K0 / (1 + K0); independent of the rotation."""
    if not isinstance(field, TensorConductivity):
        raise TypeError(f"pressure scalar k is defined for tensor fields only, got {field.kind!r}")
    # eigenvalues of R diag(1, K0) R^T are {1, K0} for every theta
    return field.K0 / (1.0 + field.K0)

