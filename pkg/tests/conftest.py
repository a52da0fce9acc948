from __future__ import annotations

import numpy as np
import pytest

from app.discretization import (
    ConstantConductivity,
    JumpConductivity,
    TensorConductivity,
    build_darcy_system,
    build_unit_square,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def mesh4():
    return build_unit_square(4)


@pytest.fixture
def darcy_constant(mesh4):
    """All four sides flux-essential: constant pressures span the kernel."""
    def _build(K: float = 1.0):
        return build_darcy_system(mesh4, ConstantConductivity(K=K))
    return _build


@pytest.fixture
def darcy_jump(mesh4):
    def _build(K0: float = 1e-4):
        return build_darcy_system(mesh4, JumpConductivity(K0=K0), essential_tags=("left", "right"))
    return _build


@pytest.fixture
def darcy_tensor(mesh4):
    def _build(K0: float = 1.0, theta: float = 0.0):
        return build_darcy_system(mesh4, TensorConductivity(K0=K0, theta=theta), essential_tags=("left", "right"))
    return _build
