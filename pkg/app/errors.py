"""Exceptions raised by the lab. Everything numerical derives from ``LabError``."""
from __future__ import annotations


class LabError(Exception):
    """Base class for failures the command line turns into a nonzero exit code."""


class NotPositiveDefiniteError(LabError):
    """A matrix expected to be SPD failed its Cholesky factorization."""


class KernelDimensionError(LabError):
    """The number of filtered near-zero modes differs from the analytic kernel."""

    def __init__(self, found: int, expected: int, label: str = ""):
        self.found = found
        self.expected = expected
        where = f" ({label})" if label else ""
        super().__init__(f"filtered {found} null modes, expected {expected}{where}")


class AsymmetricOperatorError(LabError):
    """An operator that must be symmetric is not (within tolerance)."""


class ConfigError(LabError, ValueError):
    """Invalid experiment configuration, preset name or desk-scale request."""
