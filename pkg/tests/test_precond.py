from __future__ import annotations

import numpy as np
import pytest

from app.discretization import build_biot_system, build_unit_square
from app.discretization.forms import discrete_h1_matrix
from app.linalg import to_dense
from app.solvers import (
    InverseOf,
    SumOfInverses,
    biot_B1,
    build_preconditioner,
    darcy_B1,
    darcy_B2,
    qh_norm_matrix,
)
from app.solvers.precond import exact_schur_complement, qh_norm_block


@pytest.fixture(scope="module")
def biot_system():
    return build_biot_system(build_unit_square(2), K=1e-2)


@pytest.mark.parametrize("mode", ["dg", "exact_schur"])
@pytest.mark.parametrize("K", [1.0, 1e-6])
def test_darcy_preconditioners_are_spd(darcy_constant, darcy_jump, K, mode):
    for system in (darcy_constant(K), darcy_jump(K)):
        darcy_B1(system).check_spd()
        precond = darcy_B2(system, mode)
        precond.check_spd()
        assert precond.metadata["pressure_mode"] == mode
        assert precond.sizes == system.block_sizes


@pytest.mark.parametrize("mode", ["scaled_dg", "exact_schur"])
def test_tensor_preconditioners_are_spd(darcy_tensor, mode):
    system = darcy_tensor(1e-4, np.pi / 4)
    darcy_B1(system).check_spd()
    darcy_B2(system, mode).check_spd()


def test_pressure_mode_must_fit_the_field(darcy_constant, darcy_tensor):
    with pytest.raises(ValueError):
        darcy_B2(darcy_tensor(0.1), "dg")
    with pytest.raises(ValueError):
        darcy_B2(darcy_constant(0.1), "scaled_dg")
    with pytest.raises(ValueError):
        darcy_B2(darcy_constant(0.1), "multigrid")


@pytest.mark.parametrize("K", [1.0, 1e-3])
def test_exact_schur_of_a_constant_field_is_scaled_h1(darcy_constant, K):
    system = darcy_constant(K)
    schur = exact_schur_complement(system)
    expected = K * discrete_h1_matrix(system)
    assert np.linalg.norm(schur - expected) <= 1e-10 * np.linalg.norm(expected)


def test_inverse_block_apply_solves(rng, darcy_constant):
    system = darcy_constant(1e-2)
    block = darcy_B1(system).blocks[0]
    v = rng.standard_normal(block.size)
    np.testing.assert_allclose(to_dense(block.matrix) @ block.apply(v), v, rtol=1e-8, atol=1e-10)


def test_sum_of_inverses_norm_matrix(darcy_constant):
    block = qh_norm_block(darcy_constant(1e-4), 1e-4)
    np.testing.assert_allclose(block.norm_matrix() @ block.inverse, np.eye(block.size), atol=1e-8)
    np.testing.assert_allclose(qh_norm_matrix(darcy_constant(1e-4), 1e-4), block.norm_matrix())


def test_sum_of_inverses_without_kernels():
    block = SumOfInverses(matrices=(np.diag([1.0, 2.0]), np.diag([4.0, 2.0])))
    np.testing.assert_allclose(block.inverse, np.diag([1.25, 1.0]))
    np.testing.assert_allclose(block.apply(np.ones(2)), [1.25, 1.0])


def test_block_preconditioner_apply_matches_norm_matrix(rng, darcy_jump):
    precond = darcy_B2(darcy_jump(1e-3), "dg")
    v = rng.standard_normal(precond.size)
    np.testing.assert_allclose(precond.norm_matrix() @ precond.apply(v), v, rtol=1e-6, atol=1e-8)


def test_build_preconditioner_by_name(darcy_constant, biot_system):
    system = darcy_constant(1.0)
    assert build_preconditioner(system, "B1").name == "B1"
    assert build_preconditioner(system, "B2").metadata["pressure_mode"] == "dg"
    assert build_preconditioner(system, "B2", "exact_schur").metadata["pressure_mode"] == "exact_schur"
    for name in ("B1", "B2", "B1K", "B2K"):
        precond = build_preconditioner(biot_system, name)
        assert precond.name == name
        precond.check_spd()
    with pytest.raises(ValueError):
        build_preconditioner(system, "B1K")
    with pytest.raises(ValueError):
        build_preconditioner(biot_system, "B3")


def test_biot_preconditioners_need_a_biot_system(darcy_constant):
    with pytest.raises(ValueError):
        biot_B1(darcy_constant(1.0))


def test_biot_variants_coincide_at_unit_conductivity():
    system = build_biot_system(build_unit_square(2), K=1.0)
    norms = [build_preconditioner(system, name).norm_matrix() for name in ("B1", "B2", "B1K", "B2K")]
    for other in norms[1:]:
        np.testing.assert_allclose(other, norms[0], rtol=1e-12, atol=1e-14)


def test_biot_scaled_pressure_block(biot_system):
    plain = build_preconditioner(biot_system, "B2").blocks[2].norm_matrix()
    scaled = build_preconditioner(biot_system, "B2K").blocks[2].norm_matrix()
    np.testing.assert_allclose(scaled, 1e-2 * plain)


def test_inverse_of_reports_its_size():
    assert InverseOf(np.eye(3)).size == 3
