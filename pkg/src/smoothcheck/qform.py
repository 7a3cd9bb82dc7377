"""
The jump quadratic form Q on a pair of half-balls.

For a jump vector Delta (derivatives of order <= p, graded-lex order)

    Q(Delta) = min_{v in P_p} ||v + j||^2_{L2(B-)} + ||v - j||^2_{L2(B+)},
    j(xi) = 1/2 sum_alpha Delta_alpha / alpha! xi^alpha,

where B-/B+ are the halves of the ball of radius r_hat split by the plane
xi_1 = 0. Eliminating v leaves a symmetric matrix M with Q = Delta^T M Delta.
M is assembled on the unit ball and rescaled, which keeps the Gram solve
well conditioned for small r_hat.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, List

import numpy as np
from scipy import linalg

from .errors import NumericError
from .polynomial import enumerate_multi_indices, monomial_matrix, space_dimension
from .quadrature import ball_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QFormSpec:
    """
    Dimension n, degree p and scaled radius r_hat of the half-ball pair.

    Raises:
        ValueError: If n is not 1, 2 or 3, p < 0, or r_hat is outside (0, 1)
    """

    n: int
    p: int
    r_hat: float = 0.25

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"n must be 1, 2 or 3, got {self.n}")
        if self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if not 0.0 < self.r_hat < 1.0:
            raise ValueError(f"r_hat must be in (0, 1), got {self.r_hat}")

    @property
    def dimension(self) -> int:
        return space_dimension(self.n, self.p)


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    spec: QFormSpec
    matrix: np.ndarray
    gram_condition: float
    eigenvalues: np.ndarray = field(repr=False)
    # from the inverse, accurate to rounding even for strongly graded matrices
    smallest_eigenvalue: float = 0.0

    @property
    def condition(self) -> float:
        smallest = self.smallest_eigenvalue
        return float(self.eigenvalues[-1]) / smallest if smallest > 0 else float("inf")


def _weighted_gram(left: np.ndarray, right: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return left.T @ (weights[:, None] * right)


def _factorials(n: int, p: int) -> np.ndarray:
    return np.array([a.factorial for a in enumerate_multi_indices(n, p)], dtype=float)


@lru_cache(maxsize=None)
def _unit_reduced_matrix(n: int, p: int):
    minus_pts, minus_w, plus_pts, plus_w = ball_rule(n, 1.0, 2 * p + 2)
    half = 0.5 / _factorials(n, p)
    phi_m = monomial_matrix(minus_pts, p)
    phi_p = monomial_matrix(plus_pts, p)
    psi_m = phi_m * half
    psi_p = phi_p * half

    a = _weighted_gram(phi_m, phi_m, minus_w) + _weighted_gram(phi_p, phi_p, plus_w)
    b = _weighted_gram(phi_m, psi_m, minus_w) - _weighted_gram(phi_p, psi_p, plus_w)
    c = _weighted_gram(psi_m, psi_m, minus_w) + _weighted_gram(psi_p, psi_p, plus_w)
    try:
        factor = linalg.cho_factor(a)
    except linalg.LinAlgError as e:
        raise NumericError(f"half-ball Gram matrix not positive definite (n={n}, p={p})") from e
    reduced = c - b.T @ linalg.cho_solve(factor, b)
    reduced = 0.5 * (reduced + reduced.T)
    reduced.setflags(write=False)
    return reduced, float(np.linalg.cond(a))


@lru_cache(maxsize=None)
def assemble_qform(spec: QFormSpec) -> QuadraticForm:
    """
    Reduced matrix of Q for the given half-ball pair.

    Example:
        >>> qf = assemble_qform(QFormSpec(n=1, p=0, r_hat=0.25))
        >>> round(float(qf.matrix[0, 0]), 12)
        0.125
    """
    unit, gram_condition = _unit_reduced_matrix(spec.n, spec.p)
    orders = np.array([a.order for a in enumerate_multi_indices(spec.n, spec.p)])
    scale = spec.r_hat**orders
    matrix = spec.r_hat**spec.n * (scale[:, None] * unit * scale[None, :])
    matrix.setflags(write=False)
    eigenvalues = linalg.eigh(matrix, eigvals_only=True)
    eigenvalues.setflags(write=False)

    # M = d U d with d diagonal: the largest eigenvalue of d^-1 U^-1 d^-1 is
    # computed to full relative accuracy, its reciprocal is C_p
    smallest = 0.0
    try:
        factor = linalg.cho_factor(unit)
    except linalg.LinAlgError:
        logger.warning("reduced matrix not positive definite (n=%d, p=%d)", spec.n, spec.p)
    else:
        inverse_scale = 1.0 / (spec.r_hat ** (0.5 * spec.n) * scale)
        unit_inverse = linalg.cho_solve(factor, np.eye(unit.shape[0]))
        inverse = inverse_scale[:, None] * unit_inverse * inverse_scale[None, :]
        largest = float(linalg.eigh(0.5 * (inverse + inverse.T), eigvals_only=True)[-1])
        smallest = 1.0 / largest if largest > 0 else 0.0
    logger.debug(
        "Q(n=%d, p=%d, r_hat=%g): dim %d, Gram cond %.3e",
        spec.n,
        spec.p,
        spec.r_hat,
        matrix.shape[0],
        gram_condition,
    )
    return QuadraticForm(spec, matrix, gram_condition, eigenvalues, smallest)


def _check_length(spec: QFormSpec, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float).ravel()
    if delta.shape[0] != spec.dimension:
        raise ValueError(
            f"jump vector length must be {spec.dimension} for n={spec.n}, p={spec.p}, "
            f"got {delta.shape[0]}"
        )
    return delta


def eval_q(qf: QuadraticForm, delta) -> float:
    """Delta^T M Delta, clamped at zero against rounding."""
    delta = _check_length(qf.spec, delta)
    return max(float(delta @ qf.matrix @ delta), 0.0)


def cp_constant(qf: QuadraticForm) -> float:
    """
    Smallest eigenvalue of the reduced matrix.

    Raises:
        NumericError: If it is not strictly positive
    """
    smallest = qf.smallest_eigenvalue
    if smallest <= 0.0:
        raise NumericError(
            f"positivity violated: smallest eigenvalue {smallest:.3e} "
            f"for n={qf.spec.n}, p={qf.spec.p}, r_hat={qf.spec.r_hat}"
        )
    return smallest


def brute_force_q_min(spec: QFormSpec, delta) -> float:
    """
    Q(Delta) by a dense least-squares fit of v directly on the radius r_hat
    half-balls.
    """
    delta = _check_length(spec, delta)
    minus_pts, minus_w, plus_pts, plus_w = ball_rule(spec.n, spec.r_hat, 2 * spec.p + 2)
    points = np.vstack([minus_pts, plus_pts])
    weights = np.concatenate([minus_w, plus_w])
    design = monomial_matrix(points, spec.p)
    jump = 0.5 * design @ (delta / _factorials(spec.n, spec.p))
    sign = np.concatenate([-np.ones(minus_pts.shape[0]), np.ones(plus_pts.shape[0])])
    target = sign * jump

    root_w = np.sqrt(weights)
    coef, *_ = linalg.lstsq(design * root_w[:, None], target * root_w)
    residual = design @ coef - target
    return float(np.dot(weights, residual**2))


def householder_to(normal) -> np.ndarray:
    """Symmetric orthogonal matrix mapping e_1 to the unit vector ``normal``."""
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    w = np.eye(normal.shape[0])[0] - normal
    norm2 = float(w @ w)
    if norm2 < 1e-28:
        return np.eye(normal.shape[0])
    return np.eye(normal.shape[0]) - 2.0 * np.outer(w, w) / norm2


def interface_frame_jumps(delta, normal, p: int) -> np.ndarray:
    """
    Derivative vector of the jump polynomial in the frame whose first axis
    is the interface normal.

    Q splits its ball by xi_1 = 0; a jump across a facet with normal nu is
    evaluated after the change of variables xi = H eta, H e_1 = nu.

    Example:
        In 1D with normal -1 the odd-order components change sign.
    """
    normal = np.atleast_1d(np.asarray(normal, dtype=float))
    n = normal.shape[0]
    delta = np.asarray(delta, dtype=float).ravel()
    if delta.shape[0] != space_dimension(n, p):
        raise ValueError(
            f"jump vector length must be {space_dimension(n, p)} for n={n}, p={p}, "
            f"got {delta.shape[0]}"
        )
    reflection = householder_to(normal)
    factorials = _factorials(n, p)
    minus_pts, minus_w, plus_pts, plus_w = ball_rule(n, 1.0, 2 * p)
    eta = np.vstack([minus_pts, plus_pts])
    root_w = np.sqrt(np.concatenate([minus_w, plus_w]))
    values = monomial_matrix(eta @ reflection, p) @ (delta / factorials)
    coef, *_ = linalg.lstsq(monomial_matrix(eta, p) * root_w[:, None], values * root_w)
    return coef * factorials


def cp_table(
    ns: Iterable[int], ps: Iterable[int], r_hats: Iterable[float]
) -> List[dict]:
    """Rows (n, p, r_hat, C_p, matrix_dim, cond) for every combination."""
    rows = []
    for n in ns:
        for p in ps:
            for r_hat in r_hats:
                qf = assemble_qform(QFormSpec(int(n), int(p), float(r_hat)))
                rows.append(
                    {
                        "n": int(n),
                        "p": int(p),
                        "r_hat": float(r_hat),
                        "C_p": cp_constant(qf),
                        "matrix_dim": qf.matrix.shape[0],
                        "cond": qf.condition,
                    }
                )
    return rows
