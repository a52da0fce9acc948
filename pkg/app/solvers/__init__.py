"""Solver package: block preconditioners, spectral measurements and algebraic test systems."""
from __future__ import annotations

from .precond import (  # noqa: F401
    BlockPreconditioner,
    InverseOf,
    SumOfInverses,
    build_preconditioner,
    darcy_B1,
    darcy_B2,
    biot_B1,
    biot_B2,
    biot_B1K,
    biot_B2K,
    qh_norm_matrix,
)
from .spectral import SpectrumReport, condition_number, infsup_constant, minres  # noqa: F401
from .algebraic import algebraic_condition_numbers, build_algebraic_preconditioner, random_saddle  # noqa: F401
