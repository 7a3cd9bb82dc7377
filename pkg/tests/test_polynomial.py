"""Tests for multi-indices and piecewise polynomial fields."""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from smoothcheck.errors import FieldError
from smoothcheck.mesh import build_structured_mesh, save_mesh
from smoothcheck.polynomial import (
    MultiIndex,
    PiecewisePolyField,
    enumerate_multi_indices,
    load_field,
    monomial_matrix,
    save_field,
    space_dimension,
)


@pytest.fixture
def unit_interval():
    return build_structured_mesh((0, 1), 1, 1, "interval")


@pytest.fixture
def x_squared(unit_interval):
    """x^2 on [0, 1]; centroid 1/2 and diameter 1 give 1/4 + xi + xi^2."""
    return PiecewisePolyField(unit_interval, 2, [[0.25, 1.0, 1.0]])


def test_multi_index():
    """Test order, factorial and validation."""
    alpha = MultiIndex((2, 1, 0))
    assert alpha.order == 3
    assert alpha.factorial == 2
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_graded_lex_order():
    """Test the ordering by total order, then lexicographically descending."""
    assert enumerate_multi_indices(2, 2) == [
        (0, 0),
        (1, 0),
        (0, 1),
        (2, 0),
        (1, 1),
        (0, 2),
    ]
    assert enumerate_multi_indices(1, 3) == [(0,), (1,), (2,), (3,)]


@pytest.mark.parametrize("n,p", [(1, 0), (1, 5), (2, 3), (3, 4)])
def test_space_dimension(n, p):
    """Test the index count matches C(p + n, n)."""
    assert len(enumerate_multi_indices(n, p)) == space_dimension(n, p)


def test_enumerate_rejects_bad_arguments():
    """Test dimension and degree validation."""
    with pytest.raises(ValueError, match="dimension"):
        enumerate_multi_indices(4, 1)
    with pytest.raises(ValueError, match="degree"):
        enumerate_multi_indices(2, -1)


def test_monomial_matrix_derivative():
    """Test d/dx of 1, x, x^2, x^3 at x = 2."""
    values = monomial_matrix(np.array([[2.0]]), 3, (1,))
    np.testing.assert_allclose(values, [[0.0, 1.0, 4.0, 12.0]])


def test_monomial_matrix_mixed_derivative():
    """Test d^2/dxdy of the quadratic monomials in 2D."""
    values = monomial_matrix(np.array([[0.3, 0.7]]), 2, (1, 1))
    np.testing.assert_allclose(values, [[0, 0, 0, 0, 1, 0]])


def test_field_derivatives(x_squared):
    """Test exact derivatives of x^2 at x = 1/2."""
    assert x_squared.eval_derivative(0, [0.5], (0,)) == pytest.approx(0.25)
    assert x_squared.eval_derivative(0, [0.5], (1,)) == pytest.approx(1.0)
    assert x_squared.eval_derivative(0, [0.5], (2,)) == pytest.approx(2.0)
    assert x_squared.eval_derivative(0, [0.5], (3,)) == 0.0


def test_field_derivative_outside_element(x_squared):
    """Test points outside the element are rejected."""
    with pytest.raises(FieldError, match="outside element"):
        x_squared.eval_derivative(0, [1.5], (1,))
    # the check can be bypassed for extrapolation
    assert x_squared.eval_derivative(0, [1.5], (1,), check=False) == pytest.approx(3.0)


def test_monomial_coefficients(x_squared):
    """Test conversion back to raw monomials."""
    np.testing.assert_allclose(x_squared.monomial_coefficients(0), [0.0, 0.0, 1.0], atol=1e-15)


def test_monomial_coefficients_2d():
    """Test raw monomial coefficients reproduce the field in 2D."""
    mesh = build_structured_mesh(((0, 2), (0, 1)), 2, 2, "quadrilateral")
    rng = np.random.default_rng(7)
    field = PiecewisePolyField(mesh, 2, rng.standard_normal((len(mesh), 6)))
    points = mesh.centroids[3] + 0.1 * rng.standard_normal((5, 2))
    raw = monomial_matrix(points, 2) @ field.monomial_coefficients(3)
    np.testing.assert_allclose(raw, field.evaluate(3, points), rtol=1e-12, atol=1e-12)


def test_coefficient_shape_mismatch(unit_interval):
    """Test coefficient arrays must match mesh and degree."""
    with pytest.raises(FieldError, match="shape"):
        PiecewisePolyField(unit_interval, 2, [[1.0, 2.0]])
    with pytest.raises(FieldError):
        PiecewisePolyField(unit_interval, -1, [[]])


def test_interface_jump():
    """Test jumps are right trace minus left trace."""
    mesh = build_structured_mesh((0, 1), 1, 2, "interval")
    field = PiecewisePolyField(mesh, 0, [[0.0], [1.0]])
    (iface,) = mesh.interfaces
    assert field.interface_jump(iface, (0,)) == pytest.approx(1.0)
    np.testing.assert_allclose(field.jump_vector(iface), [1.0])


def test_continuous_field_has_no_value_jump():
    """Test a globally linear field has zero jumps."""
    mesh = build_structured_mesh(((0, 1), (0, 1)), 2, 2, "triangle")
    coefficients = []
    for e in range(len(mesh)):
        c, h = mesh.centroids[e], mesh.diameters[e]
        # u = x + 2y written in the centered-scaled basis
        coefficients.append([c[0] + 2 * c[1], h, 2 * h])
    field = PiecewisePolyField(mesh, 1, coefficients)
    for iface in mesh.interfaces:
        np.testing.assert_allclose(field.jump_vector(iface), 0.0, atol=1e-14)


def test_zeros_and_scaled(x_squared):
    """Test the zero field and scalar multiples."""
    zero = PiecewisePolyField.zeros(x_squared.mesh, 2)
    assert not zero.coefficients.any()
    doubled = x_squared.scaled(2.0)
    assert doubled.eval_derivative(0, [0.5], (2,)) == pytest.approx(4.0)


def test_save_load_inline(tmp_path, x_squared):
    """Test a field file carrying its own mesh."""
    path = tmp_path / "field.json"
    save_field(x_squared, path)
    loaded = load_field(path)
    np.testing.assert_array_equal(loaded.coefficients, x_squared.coefficients)
    assert loaded.degree == 2


def test_save_load_mesh_reference(tmp_path):
    """Test a field file pointing at a mesh file next to it."""
    mesh = build_structured_mesh((0, 1), 1, 3, "interval")
    save_mesh(mesh, tmp_path / "mesh.json")
    field = PiecewisePolyField(mesh, 1, np.arange(6.0).reshape(3, 2) / 7.0)
    save_field(field, tmp_path / "field.json", mesh_ref="mesh.json")
    assert json.loads((tmp_path / "field.json").read_text())["mesh"] == "mesh.json"
    loaded = load_field(tmp_path / "field.json")
    np.testing.assert_array_equal(loaded.coefficients, field.coefficients)


def test_load_malformed_field(tmp_path):
    """Test malformed field files."""
    path = tmp_path / "bad.json"
    path.write_text("[1, 2")
    with pytest.raises(FieldError, match="malformed"):
        load_field(path)
    path.write_text('{"degree": 0}')
    with pytest.raises(FieldError, match="malformed"):
        load_field(path)
    path.write_text('{"degree": 0, "coefficients": [[1.0]]}')
    with pytest.raises(FieldError, match="mesh"):
        load_field(path)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
