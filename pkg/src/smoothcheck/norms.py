"""
L^s error norms of piecewise fields and W^{k}_s seminorms of targets.

Multi-index aggregation of seminorms: s=2 is the root of the summed squared
L2 norms, s=1 the sum of L1 norms and s=inf the maximum over alpha.
Derivatives of kinked or discontinuous targets are taken almost everywhere.
"""

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .mesh import Interface, Mesh
from .polynomial import PiecewisePolyField, enumerate_multi_indices
from .quadrature import element_lattice, element_rule, half_ball_rule, points_for_degree
from .targets import TargetFunction

logger = logging.getLogger(__name__)

EXTRA_DEGREE = 6
LINF_DENSIFICATION = 10

Region = Union[None, Tuple[str, int], Tuple[str, Interface, float]]


def parse_norm(s) -> float:
    """Normalize s to 1, 2 or inf."""
    if isinstance(s, str):
        s = s.strip().lower()
        if s in ("inf", "infinity", "max"):
            return math.inf
        try:
            s = float(s)
        except ValueError as e:
            raise ValueError(f"unsupported norm s={s!r}; use 1, 2 or inf") from e
    if s in (1, 2) or s == math.inf:
        return float(s)
    raise ValueError(f"unsupported norm s={s!r}; use 1, 2 or inf")


def norm_label(s: float) -> str:
    return "inf" if s == math.inf else str(int(s))


def element_quadrature(
    mesh: Mesh, element_id: int, degree: int, breakpoints: Sequence[float] = ()
):
    """Element rule; 1D elements are split at breakpoints strictly inside them."""
    vertices = mesh.element_vertices(element_id)
    if mesh.dimension != 1 or not breakpoints:
        return element_rule(mesh.kind, vertices, degree)
    a, b = sorted(vertices[:, 0])
    cuts = [a] + [x for x in sorted(breakpoints) if a < x < b] + [b]
    points, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        p, w = element_rule("interval", np.array([[lo], [hi]]), degree)
        points.append(p)
        weights.append(w)
    return np.vstack(points), np.concatenate(weights)


def _linf_samples(mesh: Mesh, element_id: int, degree: int, densify: int) -> np.ndarray:
    m = max(densify * points_for_degree(degree), 2)
    return element_lattice(mesh.kind, mesh.element_vertices(element_id), m)


def error_norm(
    u: TargetFunction,
    field: PiecewisePolyField,
    s,
    region: Region = None,
    degree: Optional[int] = None,
    densify: int = LINF_DENSIFICATION,
    details: bool = False,
):
    """
    ||u - field||_{L^s(region)}.

    Args:
        u: Target function
        field: Piecewise polynomial field
        s: 1, 2 or inf
        region: None for the whole domain, ("element", id), or
            ("disk", interface, radius) for the ball at the interface point,
            split by the facet hyperplane
        degree: Quadrature exactness (default 2p + 2 + EXTRA_DEGREE)
        densify: L-infinity sampling density per axis relative to the
            Gauss point count
        details: Also return the number of sample points used

    Raises:
        ValueError: Unsupported s or region
    """
    s = parse_norm(s)
    degree = 2 * field.degree + 2 + EXTRA_DEGREE if degree is None else degree
    mesh = field.mesh

    pieces = []  # (element used for evaluation, points, weights)
    if region is None or region[0] == "element":
        elements = range(len(mesh)) if region is None else [int(region[1])]
        for e in elements:
            points, weights = element_quadrature(mesh, e, degree, u.breakpoints)
            if s == math.inf:
                points = np.vstack([points, _linf_samples(mesh, e, degree, densify)])
                weights = np.zeros(points.shape[0])
            pieces.append((e, points, weights))
    elif region[0] == "disk":
        _, iface, radius = region
        disk_degree = degree + 2 * densify if s == math.inf else degree
        for side, element in ((-1, iface.left), (1, iface.right)):
            points, weights = half_ball_rule(
                mesh.dimension, radius, disk_degree, iface.point, iface.normal, side
            )
            pieces.append((element, points, weights))
    else:
        raise ValueError(f"unsupported region {region!r}")

    total = 0.0
    samples = 0
    for element, points, weights in pieces:
        diff = np.abs(u.value(points) - field.evaluate(element, points))
        samples += points.shape[0]
        if s == math.inf:
            total = max(total, float(diff.max()))
        else:
            total += float(np.dot(weights, diff**s))
    value = total if s == math.inf else total ** (1.0 / s)
    if details:
        return value, samples
    return value


def sobolev_seminorm(
    u: TargetFunction,
    mesh: Mesh,
    order: int,
    s,
    degree: Optional[int] = None,
    densify: int = LINF_DENSIFICATION,
) -> float:
    """
    |u|_{W^order_s} over the mesh domain.

    Example:
        For u = sin(x) on (0, pi), order 1, s = 2 the value is sqrt(pi / 2).
    """
    s = parse_norm(s)
    if (order, s) in u.exact_seminorms:
        return u.exact_seminorms[(order, s)]
    degree = 2 * order + 2 + EXTRA_DEGREE if degree is None else degree
    alphas = [a for a in enumerate_multi_indices(mesh.dimension, order) if a.order == order]
    per_alpha = np.zeros(len(alphas))
    for e in range(len(mesh)):
        points, weights = element_quadrature(mesh, e, degree, u.breakpoints)
        if s == math.inf:
            points = np.vstack([points, _linf_samples(mesh, e, degree, densify)])
            if u.breakpoints and mesh.dimension == 1:
                # one-sided limits at kinks belong to the a.e. derivative
                points = points[~np.isin(points[:, 0], u.breakpoints)]
        for j, alpha in enumerate(alphas):
            values = np.abs(u.derivative(points, alpha))
            if s == math.inf:
                per_alpha[j] = max(per_alpha[j], float(values.max()) if values.size else 0.0)
            else:
                per_alpha[j] += float(np.dot(weights, values**s))
    if s == math.inf:
        return float(per_alpha.max())
    if s == 1:
        return float(per_alpha.sum())
    return float(math.sqrt(per_alpha.sum()))
