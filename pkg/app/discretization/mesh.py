"""Structured triangulation of the unit square with edge connectivity and boundary tags."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from app.trace.logger import logger
from app.utils import BOUNDARY_TAGS

_TAG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulation of [0,1]^2 split into N x N squares, two triangles each.

    Local edge ``k`` of a cell is the edge opposite its vertex ``k``; ``cell_to_edges``
    and ``cell_edge_signs`` follow that local order. The global normal of an edge
    ``(a, b)`` with ``a < b`` is the tangent ``v_b - v_a`` rotated clockwise; the sign
    is +1 where that normal points out of the cell.
    """

    n_subdivisions: int
    vertices: np.ndarray        # (nv, 2)
    cells: np.ndarray           # (nc, 3) counterclockwise
    edges: np.ndarray           # (ne, 2) low index first
    cell_to_edges: np.ndarray   # (nc, 3)
    cell_edge_signs: np.ndarray # (nc, 3) of +-1
    edge_to_cells: np.ndarray   # (ne, 2), second entry -1 on the boundary
    edge_tags: np.ndarray       # (ne,) one of BOUNDARY_TAGS, "" for interior edges

    @property
    def h(self) -> float:
        return 1.0 / self.n_subdivisions

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def cell_coordinates(self) -> np.ndarray:
        """(nc, 3, 2) vertex coordinates per cell."""
        return self.vertices[self.cells]

    @cached_property
    def cell_areas(self) -> np.ndarray:
        """Signed areas; positive for counterclockwise cells."""
        p = self.cell_coordinates
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def cell_centroids(self) -> np.ndarray:
        return self.cell_coordinates.mean(axis=1)

    @cached_property
    def cell_diameters(self) -> np.ndarray:
        p = self.cell_coordinates
        sides = np.linalg.norm(p[:, [1, 2, 0]] - p[:, [2, 0, 1]], axis=2)
        return sides.max(axis=1)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        t = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(t, axis=1)

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        return self.vertices[self.edges].mean(axis=1)

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Global unit normals (tangent rotated clockwise)."""
        t = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.column_stack([t[:, 1], -t[:, 0]]) / self.edge_lengths[:, None]

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_to_cells[:, 1] < 0)

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_to_cells[:, 1] >= 0)

    def edges_with_tags(self, tags: Iterable[str]) -> np.ndarray:
        """Sorted indices of boundary edges carrying one of ``tags``."""
        tags = list(tags)
        unknown = set(tags) - set(BOUNDARY_TAGS)
        if unknown:
            raise ValueError(f"unknown boundary tags {sorted(unknown)}")
        return np.flatnonzero(np.isin(self.edge_tags, tags))


def build_unit_square(n: int) -> Mesh:
    """Divide [0,1]^2 into n x n squares and each square along its lower-left to upper-right diagonal."""
    if int(n) != n or n < 1:
        raise ValueError(f"number of subdivisions must be a positive integer, got {n!r}")
    n = int(n)

    ticks = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(ticks, ticks)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = (a.ravel() for a in np.meshgrid(np.arange(n), np.arange(n)))
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = np.column_stack([v00, v10, v11])
    cells[1::2] = np.column_stack([v00, v11, v01])

    # local edge k is opposite local vertex k
    local = np.stack([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    cell_to_edges = inverse.reshape(-1, 3)

    tangent = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
    midpoints = vertices[edges].mean(axis=1)
    outward = midpoints[cell_to_edges] - vertices[cells]
    signs = np.sign(np.einsum("cki,cki->ck", normal[cell_to_edges], outward)).astype(np.int64)

    num_edges = len(edges)
    flat_edges = cell_to_edges.ravel()
    flat_cells = np.repeat(np.arange(len(cells)), 3)
    positive = signs.ravel() > 0
    edge_to_cells = np.full((num_edges, 2), -1, dtype=np.int64)
    edge_to_cells[flat_edges[positive], 0] = flat_cells[positive]
    edge_to_cells[flat_edges[~positive], 1] = flat_cells[~positive]
    lonely = edge_to_cells[:, 0] < 0
    edge_to_cells[lonely, 0] = edge_to_cells[lonely, 1]
    edge_to_cells[lonely, 1] = -1

    edge_tags = np.full(num_edges, "", dtype="<U6")
    boundary = edge_to_cells[:, 1] < 0
    x, y = midpoints[:, 0], midpoints[:, 1]
    edge_tags[boundary & (np.abs(x) < _TAG_TOL)] = "left"
    edge_tags[boundary & (np.abs(x - 1.0) < _TAG_TOL)] = "right"
    edge_tags[boundary & (np.abs(y) < _TAG_TOL)] = "bottom"
    edge_tags[boundary & (np.abs(y - 1.0) < _TAG_TOL)] = "top"

    logger.debug("Built unit square mesh N=%s: %s cells, %s edges", n, len(cells), num_edges)
    return Mesh(
        n_subdivisions=n,
        vertices=vertices,
        cells=cells,
        edges=edges,
        cell_to_edges=cell_to_edges,
        cell_edge_signs=signs,
        edge_to_cells=edge_to_cells,
        edge_tags=edge_tags,
    )


def facet_geometry(mesh: Mesh, edge: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Length, unit normal and midpoint of an edge.

    The normal points from the first incident cell to the second, or outward on the boundary.
    """
    if not 0 <= edge < mesh.num_edges:
        raise IndexError(f"edge {edge} out of range [0, {mesh.num_edges})")
    first = mesh.edge_to_cells[edge, 0]
    local = int(np.flatnonzero(mesh.cell_to_edges[first] == edge)[0])
    sign = mesh.cell_edge_signs[first, local]
    return (
        float(mesh.edge_lengths[edge]),
        sign * mesh.edge_normals[edge],
        mesh.edge_midpoints[edge].copy(),
    )


def dump_mesh(mesh: Mesh, path: Path | str) -> Path:
    """Plain-text dump for debugging: vertex block then cell block."""
    path = Path(path)
    lines = [f"# vertices {mesh.num_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"# cells {mesh.num_cells}")
    lines += [" ".join(str(v) for v in cell) for cell in mesh.cells]
    path.write_text("\n".join(lines) + "\n")
    return path
