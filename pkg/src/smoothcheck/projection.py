"""
Approximation operators producing piecewise polynomials from targets:
the 1D Lagrange interpolant, the element-wise L2 best fit, and the local L2
projection onto the covolumes of a dual mesh.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .dual import DualMesh
from .errors import FieldError, NumericError
from .mesh import Mesh
from .norms import EXTRA_DEGREE, element_quadrature
from .polynomial import (
    PiecewisePolyField,
    enumerate_multi_indices,
    monomial_matrix,
    space_dimension,
)
from .quadrature import simplex_rule
from .targets import TargetFunction

logger = logging.getLogger(__name__)

COND_WARN = 1e6
COND_FAIL = 1e12


def _solve_gram(gram: np.ndarray, rhs: np.ndarray, where: str):
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > COND_FAIL:
        raise NumericError(f"singular local Gram matrix on {where} (cond={cond:.3e})")
    if cond > COND_WARN:
        logger.warning("ill-conditioned Gram matrix on %s (cond=%.3e)", where, cond)
    factor = linalg.cho_factor(gram)
    return linalg.cho_solve(factor, rhs), cond


def lagrange_interpolant_1d(u: TargetFunction, mesh: Mesh, p: int) -> PiecewisePolyField:
    """
    Degree-p interpolant at p+1 equispaced nodes per element, endpoints included.

    For p = 0 the single node is the left endpoint.

    Raises:
        FieldError: If the mesh is not one-dimensional
    """
    if mesh.dimension != 1:
        raise FieldError(f"Lagrange interpolation needs a 1D mesh, got dimension {mesh.dimension}")
    if p < 0:
        raise FieldError(f"degree must be >= 0, got {p}")
    field = PiecewisePolyField.zeros(mesh, p)
    coefficients = np.zeros_like(field.coefficients)
    for e in range(len(mesh)):
        a, b = sorted(mesh.element_vertices(e)[:, 0])
        nodes = np.array([[a]]) if p == 0 else np.linspace(a, b, p + 1)[:, None]
        vandermonde = field.basis(e, nodes)
        coefficients[e] = np.linalg.solve(vandermonde, u.value(nodes))
    return PiecewisePolyField(mesh, p, coefficients)


def l2_best_fit(
    u: TargetFunction, mesh: Mesh, p: int, degree: Optional[int] = None
) -> PiecewisePolyField:
    """Element-wise L2 best approximation in P_p."""
    degree = 2 * p + 2 + EXTRA_DEGREE if degree is None else degree
    field = PiecewisePolyField.zeros(mesh, p)
    coefficients = np.zeros_like(field.coefficients)
    for e in range(len(mesh)):
        points, weights = element_quadrature(mesh, e, degree, u.breakpoints)
        basis = field.basis(e, points)
        gram = basis.T @ (weights[:, None] * basis)
        rhs = basis.T @ (weights * u.value(points))
        coefficients[e], _ = _solve_gram(gram, rhs, f"element {e}")
    return PiecewisePolyField(mesh, p, coefficients)


class DualField:
    """
    One polynomial of degree p per covolume, in the basis ((x - x_i) / h_i)^alpha
    centered at the interface point with h_i the covolume diameter.
    """

    def __init__(self, dual: DualMesh, degree: int, coefficients, gram_condition=None):
        coefficients = np.array(coefficients, dtype=float)
        coefficients.setflags(write=False)
        self.dual = dual
        self.degree = degree
        self.coefficients = coefficients
        self.indices = enumerate_multi_indices(dual.mesh.dimension, degree)
        self.centers = np.array([iface.point for iface in dual.mesh.interfaces]).reshape(
            -1, dual.mesh.dimension
        )
        self.scales = np.array([_covolume_diameter(dual, i) for i in range(len(dual))])
        self.gram_condition = (
            np.array(gram_condition) if gram_condition is not None else np.zeros(len(dual))
        )

    def basis(self, index: int, points, alpha: Optional[Sequence[int]] = None) -> np.ndarray:
        points = np.atleast_2d(points)
        local = (points - self.centers[index]) / self.scales[index]
        matrix = monomial_matrix(local, self.degree, alpha)
        if alpha is not None and sum(alpha) > 0:
            matrix = matrix / self.scales[index] ** sum(alpha)
        return matrix

    def evaluate(self, index: int, points, alpha: Optional[Sequence[int]] = None) -> np.ndarray:
        return self.basis(index, points, alpha) @ self.coefficients[index]


def _covolume_diameter(dual: DualMesh, index: int) -> float:
    cov = dual.covolumes[index]
    corners = np.vstack([piece for half in cov.halves for piece in half.pieces])
    diffs = corners[:, None, :] - corners[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=-1)).max())


def covolume_quadrature(
    dual: DualMesh, index: int, degree: int, breakpoints: Sequence[float] = ()
):
    """Covolume rule; 1D pieces are split at breakpoints strictly inside them."""
    if dual.mesh.dimension != 1 or not breakpoints:
        points, weights, _ = dual.covolume_rule(index, degree)
        return points, weights
    points, weights = [], []
    for half in dual.covolumes[index].halves:
        for piece in half.pieces:
            a, b = sorted(piece[:, 0])
            cuts = [a] + [x for x in sorted(breakpoints) if a < x < b] + [b]
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                p, w = simplex_rule(np.array([[lo], [hi]]), degree)
                points.append(p)
                weights.append(w)
    return np.vstack(points), np.concatenate(weights)


def local_l2_project_dual(
    u: TargetFunction, dual: DualMesh, p: int, degree: Optional[int] = None
) -> DualField:
    """
    L2 projection of u onto P_p on every covolume.

    Raises:
        NumericError: If a local Gram matrix is numerically singular
    """
    degree = 2 * p + 2 + EXTRA_DEGREE if degree is None else degree
    empty = DualField(dual, p, np.zeros((len(dual), space_dimension(dual.mesh.dimension, p))))
    coefficients = np.zeros_like(empty.coefficients)
    conditions = np.zeros(len(dual))
    for i in range(len(dual)):
        points, weights = covolume_quadrature(dual, i, degree, u.breakpoints)
        basis = empty.basis(i, points)
        gram = basis.T @ (weights[:, None] * basis)
        rhs = basis.T @ (weights * u.value(points))
        coefficients[i], conditions[i] = _solve_gram(gram, rhs, f"covolume {i}")
    logger.debug("dual projection: max Gram condition %.3e", conditions.max(initial=0.0))
    return DualField(dual, p, coefficients, conditions)


def orthogonality_defect(
    u: TargetFunction, projected: DualField, degree: Optional[int] = None
) -> float:
    """max over covolumes and basis q of |<u - u^I, q>| / (||u|| ||q||)."""
    degree = 2 * projected.degree + 2 + EXTRA_DEGREE if degree is None else degree
    worst = 0.0
    for i in range(len(projected.dual)):
        points, weights = covolume_quadrature(projected.dual, i, degree, u.breakpoints)
        values = u.value(points)
        residual = values - projected.evaluate(i, points)
        basis = projected.basis(i, points)
        inner = basis.T @ (weights * residual)
        u_norm = np.sqrt(np.dot(weights, values**2))
        q_norms = np.sqrt((weights[:, None] * basis**2).sum(axis=0))
        scale = max(u_norm, 1e-300) * q_norms
        worst = max(worst, float(np.max(np.abs(inner) / scale)))
    return worst


def dual_projection_error(
    u: TargetFunction, projected: DualField, degree: Optional[int] = None
) -> float:
    """||u - u^I||_{L2} over the union of the interior covolumes."""
    degree = 2 * projected.degree + 2 + EXTRA_DEGREE if degree is None else degree
    total = 0.0
    for i in range(len(projected.dual)):
        points, weights = covolume_quadrature(projected.dual, i, degree, u.breakpoints)
        diff = u.value(points) - projected.evaluate(i, points)
        total += float(np.dot(weights, diff**2))
    return float(np.sqrt(total))
