from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sps

from app.discretization import (
    ConstantConductivity,
    JumpConductivity,
    TensorConductivity,
    build_biot_system,
    build_darcy_system,
    build_unit_square,
)
from app.discretization.forms import (
    assemble_dg_laplacian,
    assemble_div,
    assemble_divdiv,
    assemble_elasticity,
    assemble_p0_mass,
    assemble_velocity_mass,
    discrete_gradient,
    discrete_h1_matrix,
    divergence_block,
    unweighted_flux_mass,
)
from app.discretization.spaces import build_dofmap
from app.linalg import factor_spd, symmetry_defect, to_dense


@pytest.fixture(scope="module")
def mesh():
    return build_unit_square(4)


@pytest.fixture(scope="module")
def spaces(mesh):
    return build_dofmap(mesh, "RT0"), build_dofmap(mesh, "P0")


def _relative(a, b):
    a, b = to_dense(a), to_dense(b)
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_divergence_entries_are_edge_lengths(mesh, spaces):
    rt0, p0 = spaces
    b = to_dense(assemble_div(mesh, rt0, p0))
    np.testing.assert_allclose(np.abs(b).max(axis=0), mesh.edge_lengths)
    np.testing.assert_allclose(b[:, mesh.interior_edges].sum(axis=0), 0.0, atol=1e-14)
    assert np.all((b != 0).sum(axis=0)[mesh.interior_edges] == 2)


def test_divdiv_is_b_transpose_mp_inverse_b(mesh, spaces):
    rt0, p0 = spaces
    b = assemble_div(mesh, rt0, p0)
    mp = assemble_p0_mass(mesh, p0)
    expected = b.T @ sps.diags(1.0 / mp.diagonal()) @ b
    assert _relative(assemble_divdiv(mesh, rt0), expected) < 1e-12


@pytest.mark.parametrize("c", [1.0, 0.1, 1e-6])
def test_weighted_divdiv_of_a_constant_field(mesh, spaces, c):
    rt0, _ = spaces
    weighted = assemble_divdiv(mesh, rt0, ConstantConductivity(K=c))
    assert _relative(weighted, assemble_divdiv(mesh, rt0) / c) < 1e-12


@pytest.mark.parametrize("c", [1.0, 1e-4])
def test_weighted_mass_of_a_constant_field(mesh, spaces, c):
    rt0, _ = spaces
    weighted = assemble_velocity_mass(mesh, rt0, ConstantConductivity(K=c))
    assert _relative(weighted, assemble_velocity_mass(mesh, rt0) / c) < 1e-12


def test_velocity_mass_is_spd(mesh, spaces):
    rt0, _ = spaces
    for field in (None, JumpConductivity(K0=1e-3), TensorConductivity(K0=1e-2, theta=np.pi / 4)):
        mass = assemble_velocity_mass(mesh, rt0, field)
        assert symmetry_defect(mass) < 1e-12
        factor_spd(mass)


def test_p0_mass_is_cell_areas(mesh, spaces):
    _, p0 = spaces
    np.testing.assert_allclose(assemble_p0_mass(mesh, p0).diagonal(), mesh.cell_areas)
    weighted = assemble_p0_mass(mesh, p0, JumpConductivity(K0=0.5)).diagonal()
    assert set(np.round(weighted / mesh.cell_areas, 12)) == {0.5, 1.0}


def test_dg_laplacian_kernel_without_dirichlet_sides(mesh, spaces):
    _, p0 = spaces
    laplacian = assemble_dg_laplacian(mesh, p0, JumpConductivity(K0=1e-4))
    np.testing.assert_allclose(laplacian @ np.ones(mesh.num_cells), 0.0, atol=1e-14)
    assert symmetry_defect(laplacian) == 0.0
    assert np.linalg.eigvalsh(to_dense(laplacian)).min() > -1e-12


def test_dg_laplacian_is_definite_with_dirichlet_sides(mesh, spaces):
    _, p0 = spaces
    factor_spd(assemble_dg_laplacian(mesh, p0, ConstantConductivity(K=1.0), ("top", "bottom")))


def test_dg_laplacian_scales_with_a_constant_field(mesh, spaces):
    _, p0 = spaces
    unit = assemble_dg_laplacian(mesh, p0, ConstantConductivity(K=1.0))
    scaled = assemble_dg_laplacian(mesh, p0, ConstantConductivity(K=1e-3))
    assert _relative(scaled, 1e-3 * unit) < 1e-12


def test_dg_laplacian_rejects_tensors(mesh, spaces):
    _, p0 = spaces
    with pytest.raises(TypeError):
        assemble_dg_laplacian(mesh, p0, TensorConductivity(K0=0.1))


def test_elasticity_kernel_holds_rigid_motions(mesh):
    p2 = build_dofmap(mesh, "P2vec")
    stiffness = assemble_elasticity(mesh, p2)
    nodes = np.vstack([mesh.vertices, mesh.edge_midpoints])
    translation = np.zeros(p2.total_dofs)
    translation[0::2] = 1.0
    rotation = np.zeros(p2.total_dofs)
    rotation[0::2] = -nodes[:, 1]
    rotation[1::2] = nodes[:, 0]
    np.testing.assert_allclose(stiffness @ translation, 0.0, atol=1e-12)
    np.testing.assert_allclose(stiffness @ rotation, 0.0, atol=1e-12)
    assert symmetry_defect(stiffness) < 1e-12


def test_darcy_system_sizes_and_kernel(mesh):
    closed = build_darcy_system(mesh, ConstantConductivity(K=1.0))
    assert closed.block_sizes == [mesh.num_edges - 16, mesh.num_cells]
    assert closed.expected_kernel_dim == 1
    assert closed.pressure_dirichlet_tags == ()
    np.testing.assert_allclose(closed.blocks["bdiv"].T @ closed.pressure_nullspace, 0.0, atol=1e-14)

    sides = build_darcy_system(mesh, JumpConductivity(K0=0.1), essential_tags=("left", "right"))
    assert sides.block_sizes == [mesh.num_edges - 8, mesh.num_cells]
    assert sides.expected_kernel_dim == 0
    assert sides.pressure_nullspace is None
    assert set(sides.pressure_dirichlet_tags) == {"top", "bottom"}


def test_darcy_matrix_is_symmetric_saddle(mesh):
    system = build_darcy_system(mesh, TensorConductivity(K0=1e-2, theta=0.4), essential_tags=("left", "right"))
    matrix = system.matrix()
    assert matrix.shape == (system.size, system.size)
    assert symmetry_defect(matrix) < 1e-12
    n_flux = system.block_sizes[0]
    assert abs(matrix[n_flux:, n_flux:]).sum() == 0


def test_jump_needs_even_subdivisions():
    with pytest.raises(ValueError):
        build_darcy_system(build_unit_square(3), JumpConductivity(K0=0.1))


def test_biot_system_at_two_subdivisions():
    system = build_biot_system(build_unit_square(2), K=1e-2)
    assert system.block_sizes == [24, 10, 8]
    assert system.size == 42
    assert system.expected_kernel_dim == 0
    assert symmetry_defect(system.matrix()) < 1e-12
    factor_spd(system.blocks["ae"], label="elasticity")


def test_biot_couplings_carry_a_minus_sign():
    system = build_biot_system(build_unit_square(2), K=1.0)
    np.testing.assert_allclose(to_dense(system.blocks["bv"]), -to_dense(divergence_block(system)))


def test_discrete_gradient_is_minus_adjoint_of_div(mesh, rng):
    system = build_darcy_system(mesh, ConstantConductivity(K=1.0))
    gradient = discrete_gradient(system)
    mass = unweighted_flux_mass(system)
    b = divergence_block(system)
    q = rng.standard_normal(system.block_sizes[1])
    v = rng.standard_normal(system.block_sizes[0])
    lhs = v @ (mass @ (gradient @ q))
    rhs = -q @ (b @ v)
    assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_discrete_h1_matrix_is_psd_with_constant_kernel(mesh):
    system = build_darcy_system(mesh, ConstantConductivity(K=1.0))
    h1 = discrete_h1_matrix(system)
    np.testing.assert_allclose(h1 @ np.ones(h1.shape[0]), 0.0, atol=1e-10)
    eigenvalues = np.linalg.eigvalsh(h1)
    assert eigenvalues[0] > -1e-10
    assert eigenvalues[1] > 1e-6
