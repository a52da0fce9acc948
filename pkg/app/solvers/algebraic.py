"""Structural preconditioners on random algebraic saddle systems [[alpha A, B^T], [B, 0]].

No mesh involved: A is a random SPD matrix and B a random full-rank coupling, which
isolates the alpha-robustness of each block structure from the discretization.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sps

from app.trace.logger import logger

from .precond import BlockPreconditioner, InverseOf, SumOfInverses
from .spectral import condition_number

ALGEBRAIC_PRECONDITIONERS = ("schur", "augmented_b1", "augmented_b2")


@dataclass(frozen=True, eq=False)
class RandomSaddle:
    a: np.ndarray  # (n, n) SPD
    b: np.ndarray  # (m, n), full row rank
    alpha: float

    def matrix(self) -> np.ndarray:
        m = self.b.shape[0]
        return np.block([[self.alpha * self.a, self.b.T], [self.b, np.zeros((m, m))]])


def random_saddle(n: int, m: int, alpha: float, seed: int = 0) -> RandomSaddle:
    if not 0 < m < n:
        raise ValueError(f"need 0 < m < n, got m={m}, n={n}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n))
    a = x @ x.T / n + np.eye(n)
    b = rng.standard_normal((m, n))
    return RandomSaddle(a=a, b=b, alpha=alpha)


def _schur(saddle: RandomSaddle) -> np.ndarray:
    s = saddle.b @ np.linalg.solve(saddle.alpha * saddle.a, saddle.b.T)
    return 0.5 * (s + s.T)


def schur_preconditioner(saddle: RandomSaddle) -> BlockPreconditioner:
    """blockdiag((alpha A)^-1, (B (alpha A)^-1 B^T)^-1); spectrum {1, (1 +- sqrt 5)/2}."""
    return BlockPreconditioner(
        name="schur",
        blocks=(InverseOf(saddle.alpha * saddle.a, "alpha A"), InverseOf(_schur(saddle), "Schur complement")),
    )


def augmented_b1(saddle: RandomSaddle) -> BlockPreconditioner:
    alpha = saddle.alpha
    m = saddle.b.shape[0]
    return BlockPreconditioner(
        name="augmented_b1",
        blocks=(
            InverseOf(alpha * (saddle.a + saddle.b.T @ saddle.b), "alpha (A + B^T B)"),
            InverseOf(sps.identity(m, format="csr") / alpha, "I / alpha"),
        ),
    )


def augmented_b2(saddle: RandomSaddle) -> BlockPreconditioner:
    m = saddle.b.shape[0]
    return BlockPreconditioner(
        name="augmented_b2",
        blocks=(
            InverseOf(saddle.alpha * saddle.a + saddle.b.T @ saddle.b, "alpha A + B^T B"),
            SumOfInverses(matrices=(np.eye(m), _schur(saddle)), label="I^-1 + S^-1"),
        ),
    )


_BUILDERS = {
    "schur": schur_preconditioner,
    "augmented_b1": augmented_b1,
    "augmented_b2": augmented_b2,
}


def build_algebraic_preconditioner(saddle: RandomSaddle, name: str) -> BlockPreconditioner:
    if name not in _BUILDERS:
        raise ValueError(f"unknown algebraic preconditioner {name!r}; choose from {ALGEBRAIC_PRECONDITIONERS}")
    return _BUILDERS[name](saddle)


def algebraic_condition_numbers(
    n: int, m: int, alphas: Iterable[float], seed: int = 0
) -> dict[str, list[float]]:
    """cond of each structural preconditioner over ``alphas`` for one fixed (A, B) draw."""
    results: dict[str, list[float]] = {name: [] for name in ALGEBRAIC_PRECONDITIONERS}
    for alpha in alphas:
        saddle = random_saddle(n, m, alpha, seed)
        for name, build in _BUILDERS.items():
            report = condition_number(saddle.matrix(), build(saddle), expected_kernel=0)
            results[name].append(report.cond)
        logger.debug("alpha=%s: %s", alpha, {k: v[-1] for k, v in results.items()})
    return results
