"""Matrix substrate: dense conversion, SPD factorization and generalized symmetric eigensolves.

Assembled forms are ``scipy.sparse`` CSR matrices; everything spectral happens on
dense ``numpy`` arrays (desk-scale problems, full spectra).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from app.errors import NotPositiveDefiniteError
from app.trace.logger import logger

Matrix = Union[np.ndarray, sps.spmatrix, sps.sparray]


def to_dense(matrix: Matrix) -> np.ndarray:
    if sps.issparse(matrix):
        return matrix.toarray()
    return np.asarray(matrix, dtype=float)


def symmetry_defect(matrix: Matrix) -> float:
    """max|A - A^T| / max|A| (0 for the zero matrix)."""
    if sps.issparse(matrix):
        scale = abs(matrix).max()
        defect = abs(matrix - matrix.T).max() if matrix.nnz else 0.0
    else:
        dense = np.asarray(matrix)
        scale = np.abs(dense).max(initial=0.0)
        defect = np.abs(dense - dense.T).max(initial=0.0)
    return float(defect / scale) if scale > 0 else 0.0


def coo_assemble(rows: np.ndarray, cols: np.ndarray, values: np.ndarray, shape: tuple[int, int]) -> sps.csr_matrix:
    """Triplets to CSR with duplicates summed."""
    matrix = sps.coo_matrix((values.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    return matrix


@dataclass(frozen=True, eq=False)
class SPDFactor:
    """Cholesky factorization handle."""

    factor: tuple
    size: int

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self.factor, rhs)

    def inverse(self) -> np.ndarray:
        inv = self.solve(np.eye(self.size))
        return 0.5 * (inv + inv.T)


def factor_spd(matrix: Matrix, label: str = "matrix") -> SPDFactor:
    dense = to_dense(matrix)
    try:
        factor = sla.cho_factor(dense, lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{label} is not positive definite: {exc}") from exc
    return SPDFactor(factor=factor, size=dense.shape[0])


def deflated_inverse(matrix: Matrix, nullspace: Optional[np.ndarray] = None) -> np.ndarray:
    """Inverse of an SPD matrix, or its pseudoinverse when ``nullspace`` spans its kernel.

    Uses (S + c Z Z^T)^-1 - Z Z^T / c for orthonormal Z, which is S^+ when S Z = 0;
    c is the mean diagonal of S so the shift matches the scale of S.
    """
    dense = to_dense(matrix)
    if nullspace is None:
        return factor_spd(dense).inverse()
    basis, _ = np.linalg.qr(np.asarray(nullspace, dtype=float).reshape(dense.shape[0], -1))
    projector = basis @ basis.T
    shift = float(np.mean(np.diag(dense))) or 1.0
    shifted = factor_spd(dense + shift * projector, label="deflated matrix").inverse()
    return shifted - projector / shift


def generalized_eigs(a: Matrix, n: Matrix) -> np.ndarray:
    """All eigenvalues of A x = lambda N x, ascending.

    Both matrices are first scaled by diag(N)^-1/2 on each side, a congruence that
    leaves the spectrum unchanged, then handed to a Cholesky-based dense solver.
    """
    a_dense = to_dense(a)
    n_dense = to_dense(n)
    if a_dense.shape != n_dense.shape:
        raise ValueError(f"shape mismatch {a_dense.shape} vs {n_dense.shape}")
    diagonal = np.diag(n_dense)
    if np.any(diagonal <= 0.0):
        raise NotPositiveDefiniteError("norm matrix has a non-positive diagonal entry")
    scale = 1.0 / np.sqrt(diagonal)
    a_dense = scale[:, None] * a_dense * scale[None, :]
    n_dense = scale[:, None] * n_dense * scale[None, :]
    logger.debug("Generalized eigensolve of size %s", a_dense.shape[0])
    try:
        return sla.eigh(a_dense, n_dense, eigvals_only=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"norm matrix is not positive definite: {exc}") from exc
