"""
Elementary geometry: angles, measures, in-radii, point predicates and the
two dihedral-angle relations used by the 3D safe-radius argument.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .errors import MeshError

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-12


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in [0, pi] between two non-zero vectors."""
    cos = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def simplex_measure(vertices: np.ndarray) -> float:
    """Length, area or volume of a simplex embedded in its own dimension."""
    vertices = np.asarray(vertices, dtype=float)
    edges = vertices[1:] - vertices[0]
    k = edges.shape[0]
    if edges.shape[1] == k:
        return abs(float(np.linalg.det(edges))) / math.factorial(k)
    # lower-dimensional simplex in higher-dimensional space
    gram = edges @ edges.T
    return math.sqrt(max(float(np.linalg.det(gram)), 0.0)) / math.factorial(k)


def simplex_inradius(vertices: np.ndarray) -> float:
    """Radius of the inscribed ball: r = n * |T| / |boundary of T|."""
    vertices = np.asarray(vertices, dtype=float)
    n = vertices.shape[0] - 1
    if n == 1:
        return 0.5 * float(np.linalg.norm(vertices[1] - vertices[0]))
    volume = simplex_measure(vertices)
    boundary = sum(
        simplex_measure(np.delete(vertices, i, axis=0)) for i in range(n + 1)
    )
    return n * volume / boundary


def diameter(vertices: np.ndarray) -> float:
    """Largest pairwise vertex distance."""
    vertices = np.asarray(vertices, dtype=float)
    diffs = vertices[:, None, :] - vertices[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=-1)).max())


def polygon_corner_angles(vertices: np.ndarray) -> np.ndarray:
    """Interior corner angles of a convex polygon given in cyclic order."""
    vertices = np.asarray(vertices, dtype=float)
    m = vertices.shape[0]
    angles = np.empty(m)
    for i in range(m):
        prev_v = vertices[i - 1] - vertices[i]
        next_v = vertices[(i + 1) % m] - vertices[i]
        angles[i] = angle_between(prev_v, next_v)
    return angles


def tetra_dihedral_angles(vertices: np.ndarray) -> np.ndarray:
    """The six interior dihedral angles of a tetrahedron, one per edge."""
    vertices = np.asarray(vertices, dtype=float)
    angles = []
    for i in range(4):
        for j in range(i + 1, 4):
            k, m = [v for v in range(4) if v not in (i, j)]
            a, b = vertices[i], vertices[j]
            axis = b - a
            axis = axis / np.linalg.norm(axis)
            uk = vertices[k] - a
            um = vertices[m] - a
            uk = uk - np.dot(uk, axis) * axis
            um = um - np.dot(um, axis) * axis
            angles.append(angle_between(uk, um))
    return np.array(angles)


def barycentric_coordinates(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points (rows) with respect to a full simplex."""
    vertices = np.asarray(vertices, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    jac = (vertices[1:] - vertices[0]).T
    lam = np.linalg.solve(jac, (points - vertices[0]).T).T
    return np.hstack([1.0 - lam.sum(axis=1, keepdims=True), lam])


def points_in_simplex(
    vertices: np.ndarray, points: np.ndarray, tol: float = 1e-12
) -> np.ndarray:
    """Boolean mask of points inside (or within tol of) a simplex."""
    return (barycentric_coordinates(vertices, points) >= -tol).all(axis=1)


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def point_triangle_distance(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> float:
    """Euclidean distance from a point to a (closed) triangle in 3D."""
    edges = np.stack([b - a, c - a], axis=1)
    lam, *_ = np.linalg.lstsq(edges, p - a, rcond=None)
    if lam[0] >= 0.0 and lam[1] >= 0.0 and lam.sum() <= 1.0:
        return float(np.linalg.norm(p - (a + edges @ lam)))
    return min(
        point_segment_distance(p, a, b),
        point_segment_distance(p, b, c),
        point_segment_distance(p, c, a),
    )


def _scale(*points: np.ndarray) -> float:
    return diameter(np.array(points))


def _perpendicular(v: np.ndarray, axis_unit: np.ndarray) -> np.ndarray:
    return v - np.dot(v, axis_unit) * axis_unit


@dataclass(frozen=True)
class AngleIdentityResult:
    """
    Dihedral angle between planes ADC and ADG against the angle HKx.

    ``residual`` is the defect of the relation cos(theta_f) = cos(theta_s)/3;
    ``residual_equal`` is the defect of cos(theta_f) = cos(theta_s), which
    holds for every non-degenerate configuration.
    """

    theta_f: float
    theta_s: float
    residual: float
    residual_equal: float
    cos_ratio: Optional[float]


@dataclass(frozen=True)
class AngleInequalityResult:
    theta_f: float
    theta_ext: float
    ratio: Optional[float]
    applicable: bool


def verify_angle_identity(A, D, C, G) -> AngleIdentityResult:
    """
    Compare the angle between planes ADC and ADG with the angle HKx.

    x is the barycenter of triangle ADC, K the foot of the perpendicular from
    x onto line AD and H the orthogonal projection of x onto plane ADG.

    Raises:
        MeshError: If A, D, C are collinear or G lies on plane ADC
    """
    A, D, C, G = (np.asarray(v, dtype=float) for v in (A, D, C, G))
    scale = _scale(A, D, C, G)
    n_adc = np.cross(D - A, C - A)
    if np.linalg.norm(n_adc) <= DEGENERACY_TOL * scale**2:
        raise MeshError("degenerate configuration: A, D, C are collinear")
    n_adg = np.cross(D - A, G - A)
    if abs(np.dot(n_adc, G - A)) <= DEGENERACY_TOL * scale**3:
        raise MeshError("degenerate configuration: A, D, C, G are coplanar")

    cos_f = abs(np.dot(n_adc, n_adg)) / (np.linalg.norm(n_adc) * np.linalg.norm(n_adg))
    cos_f = float(min(cos_f, 1.0))

    x = (A + D + C) / 3.0
    axis = (D - A) / np.linalg.norm(D - A)
    K = A + np.dot(x - A, axis) * axis
    n_unit = n_adg / np.linalg.norm(n_adg)
    H = x - np.dot(x - A, n_unit) * n_unit
    kx = x - K
    kh = H - K
    # KH is the projection of Kx onto plane ADG, so cos(HKx) = |KH| / |Kx|
    cos_s = float(min(np.linalg.norm(kh) / np.linalg.norm(kx), 1.0))

    theta_f = math.acos(cos_f)
    theta_s = math.acos(cos_s)
    ratio = cos_f / cos_s if cos_s > DEGENERACY_TOL else None
    return AngleIdentityResult(
        theta_f=theta_f,
        theta_s=theta_s,
        residual=abs(cos_f - cos_s / 3.0),
        residual_equal=abs(cos_f - cos_s),
        cos_ratio=ratio,
    )


def verify_angle_inequality(A, D, C, E) -> AngleInequalityResult:
    """
    Dihedral angles along AD: half-plane ADC against ADG and against ADE.

    G is the vertex average of tetrahedron ADCE. When the exterior angle is
    acute, cos(theta_ext) < cos(theta_f) and ``ratio`` = cos(theta_f) /
    cos(theta_ext) > 1. Otherwise the configuration is reported as not
    applicable with ``ratio`` None.

    Raises:
        MeshError: If ADCE is degenerate
    """
    A, D, C, E = (np.asarray(v, dtype=float) for v in (A, D, C, E))
    scale = _scale(A, D, C, E)
    volume = abs(np.dot(np.cross(D - A, C - A), E - A)) / 6.0
    if volume <= DEGENERACY_TOL * scale**3:
        raise MeshError(f"degenerate tetrahedron ADCE (volume {volume:.3e})")

    G = (A + D + C + E) / 4.0
    axis = (D - A) / np.linalg.norm(D - A)
    c_perp = _perpendicular(C - A, axis)
    e_perp = _perpendicular(E - A, axis)
    g_perp = _perpendicular(G - A, axis)

    theta_f = angle_between(c_perp, g_perp)
    theta_ext = angle_between(c_perp, e_perp)
    cos_ext = math.cos(theta_ext)
    if cos_ext <= DEGENERACY_TOL:
        return AngleInequalityResult(theta_f, theta_ext, None, False)
    return AngleInequalityResult(theta_f, theta_ext, math.cos(theta_f) / cos_ext, True)


def random_identity_configs(rng: np.random.Generator, count: int) -> List[tuple]:
    """Random non-degenerate (A, D, C, G) configurations."""
    configs = []
    while len(configs) < count:
        A, D, C, G = rng.standard_normal((4, 3))
        scale = _scale(A, D, C, G)
        if np.linalg.norm(np.cross(D - A, C - A)) < 1e-3 * scale**2:
            continue
        if abs(np.dot(np.cross(D - A, C - A), G - A)) < 1e-3 * scale**3:
            continue
        configs.append((A, D, C, G))
    return configs


def random_inequality_configs(rng: np.random.Generator, count: int) -> List[tuple]:
    """Random tetrahedra ADCE whose dihedral angle along AD is acute."""
    configs = []
    while len(configs) < count:
        A, D, C, E = rng.standard_normal((4, 3))
        scale = _scale(A, D, C, E)
        if abs(np.dot(np.cross(D - A, C - A), E - A)) < 1e-3 * scale**3:
            continue
        if verify_angle_inequality(A, D, C, E).applicable:
            configs.append((A, D, C, E))
    return configs


@dataclass(frozen=True)
class GammaSummary:
    count: int
    inapplicable: int
    min_ratio: Optional[float]
    max_ratio: Optional[float]
    median_ratio: Optional[float]


def empirical_gamma(results: Iterable[AngleInequalityResult]) -> GammaSummary:
    """Aggregate inequality ratios; ``max_ratio`` is the empirical gamma."""
    results = list(results)
    ratios = np.array([r.ratio for r in results if r.applicable])
    inapplicable = sum(1 for r in results if not r.applicable)
    if ratios.size == 0:
        return GammaSummary(len(results), inapplicable, None, None, None)
    return GammaSummary(
        count=len(results),
        inapplicable=inapplicable,
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        median_ratio=float(np.median(ratios)),
    )
