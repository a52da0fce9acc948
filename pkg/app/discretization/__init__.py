"""Discretization package: mesh, finite element spaces, conductivities and bilinear forms."""
from __future__ import annotations

from .mesh import Mesh, build_unit_square, dump_mesh, facet_geometry  # noqa: F401
from .spaces import DofMap, build_dofmap, reference_basis  # noqa: F401
from .conductivity import (  # noqa: F401
    ConductivityField,
    ConstantConductivity,
    JumpConductivity,
    TensorConductivity,
    cell_value,
    facet_harmonic_mean,
)
from .forms import AssembledSaddleSystem, build_biot_system, build_darcy_system  # noqa: F401
