"""Tests for interpolation, element L2 fits and the dual local projection."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from smoothcheck.dual import build_dual_covolume
from smoothcheck.errors import FieldError
from smoothcheck.mesh import build_structured_mesh
from smoothcheck.norms import error_norm
from smoothcheck.projection import (
    dual_projection_error,
    l2_best_fit,
    lagrange_interpolant_1d,
    local_l2_project_dual,
    orthogonality_defect,
)
from smoothcheck.targets import make_target


def test_interpolant_reproduces_polynomials():
    """Test degree-p interpolation is exact on P_p."""
    mesh = build_structured_mesh((0, 1), 1, 3, "interval")
    u = make_target("poly", terms=[[1.0, [2]], [-0.5, [1]]])
    field = lagrange_interpolant_1d(u, mesh, 2)
    assert error_norm(u, field, "inf") < 1e-13


def test_interpolant_degree_zero_uses_left_endpoint():
    """Test p = 0 takes the value at the left node."""
    mesh = build_structured_mesh((0, 1), 1, 2, "interval")
    field = lagrange_interpolant_1d(make_target("poly", terms=[[1.0, [1]]]), mesh, 0)
    np.testing.assert_allclose(field.coefficients[:, 0], [0.0, 0.5], atol=1e-15)


def test_interpolant_error_bound():
    """Test the linear interpolant of sin(pi x) obeys (pi h)^2 / 8."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    field = lagrange_interpolant_1d(make_target("sin_pi_x"), mesh, 1)
    error = error_norm(make_target("sin_pi_x"), field, "inf")
    assert 0 < error <= (math.pi * mesh.h) ** 2 / 8.0


def test_interpolant_requires_1d():
    """Test interpolation is refused on 2D meshes."""
    mesh = build_structured_mesh(((0, 1), (0, 1)), 2, 2, "triangle")
    with pytest.raises(FieldError, match="1D"):
        lagrange_interpolant_1d(make_target("sin_pi_xy"), mesh, 1)


def test_l2_best_fit_mean():
    """Test the degree-zero fit is the element mean."""
    mesh = build_structured_mesh((0, 1), 1, 1, "interval")
    field = l2_best_fit(make_target("poly", terms=[[1.0, [1]]]), mesh, 0)
    assert field.coefficients[0, 0] == pytest.approx(0.5, rel=1e-13)


@pytest.mark.parametrize("kind", ["triangle", "quadrilateral"])
def test_l2_best_fit_reproduces_polynomials(kind):
    """Test the fit is exact on P_p in 2D."""
    mesh = build_structured_mesh(((0, 1), (0, 1)), 2, 2, kind)
    u = make_target("poly", terms=[[1.0, [1, 1]], [2.0, [0, 2]], [0.5, [0, 0]]])
    field = l2_best_fit(u, mesh, 2)
    assert error_norm(u, field, 2) < 1e-12


def test_l2_best_fit_converges():
    """Test halving h cuts the L2 error by about 2^(p+1)."""
    u = make_target("sin_pi_x")
    errors = []
    for divisions in (8, 16):
        mesh = build_structured_mesh((0, 1), 1, divisions, "interval")
        errors.append(error_norm(u, l2_best_fit(u, mesh, 1), 2))
    assert math.log2(errors[0] / errors[1]) == pytest.approx(2.0, abs=0.1)


def test_dual_projection_reproduces_polynomials():
    """Test the covolume projection is exact on P_p."""
    mesh = build_structured_mesh(((0, 1), (0, 1)), 2, 2, "triangle")
    dual = build_dual_covolume(mesh)
    u = make_target("poly", terms=[[1.0, [1, 0]], [-3.0, [0, 1]]])
    projected = local_l2_project_dual(u, dual, 1)
    assert dual_projection_error(u, projected) < 1e-12
    np.testing.assert_allclose(
        projected.evaluate(0, mesh.interfaces[0].point[None, :]),
        u.value(mesh.interfaces[0].point[None, :]),
        atol=1e-12,
    )


@pytest.mark.parametrize("p", [0, 1, 2])
def test_dual_projection_orthogonality(p):
    """Test u - u^I is L2-orthogonal to P_p on every covolume."""
    mesh = build_structured_mesh((0, 1), 1, 4, "interval")
    u = make_target("sin_pi_x")
    projected = local_l2_project_dual(u, build_dual_covolume(mesh), p)
    assert orthogonality_defect(u, projected) < 1e-10
    assert np.all(projected.gram_condition >= 1.0)


def test_dual_projection_with_breakpoint():
    """Test a step inside a covolume is integrated piecewise."""
    mesh = build_structured_mesh((0, 1), 1, 2, "interval")
    u = make_target("step", location=0.4, height=1.0)
    projected = local_l2_project_dual(u, build_dual_covolume(mesh), 0)
    # covolume (0.25, 0.75) sees the step on (0.4, 0.75)
    assert projected.coefficients[0, 0] == pytest.approx(0.7, rel=1e-13)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
