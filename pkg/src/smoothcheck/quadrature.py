"""
Quadrature rules on reference cells, physical elements and half-balls.

Gauss-Legendre tensor rules are used on intervals, quadrilaterals and
hexahedra; triangles and tetrahedra use collapsed (Duffy) Gauss rules. All
rules are specified by the polynomial degree they must integrate exactly.
"""

import math
from functools import lru_cache

import numpy as np
from scipy import special

SIMPLEX_KINDS = ("interval", "triangle", "tetrahedron")
TENSOR_KINDS = ("quadrilateral", "hexahedron")

# Reference vertex order of the multilinear cells (counter-clockwise base).
QUAD_REFERENCE_VERTICES = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
HEX_REFERENCE_VERTICES = np.array(
    [
        [0, 0, 0],
        [1, 0, 0],
        [1, 1, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 0, 1],
        [1, 1, 1],
        [0, 1, 1],
    ],
    dtype=float,
)


def points_for_degree(degree: int) -> int:
    """Number of Gauss-Legendre points exact for the given 1D degree."""
    return max(int(degree), 0) // 2 + 1


def _readonly(*arrays):
    for array in arrays:
        array.setflags(write=False)
    return arrays


@lru_cache(maxsize=None)
def gauss_legendre(npts: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = special.roots_legendre(npts)
    return _readonly(0.5 * (x + 1.0), 0.5 * w)


@lru_cache(maxsize=None)
def tensor_rule(dim: int, degree: int):
    """Tensor Gauss rule on the unit cube [0, 1]^dim, exact per axis to degree."""
    x, w = gauss_legendre(points_for_degree(degree))
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return _readonly(points, weights)


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Collapsed Gauss rule on the triangle (0,0), (1,0), (0,1)."""
    xu, wu = gauss_legendre(points_for_degree(degree + 1))
    xv, wv = gauss_legendre(points_for_degree(degree))
    u, v = np.meshgrid(xu, xv, indexing="ij")
    wu_, wv_ = np.meshgrid(wu, wv, indexing="ij")
    points = np.stack([u.ravel(), (v * (1.0 - u)).ravel()], axis=1)
    weights = (wu_ * wv_ * (1.0 - u)).ravel()
    return _readonly(points, weights)


@lru_cache(maxsize=None)
def tetrahedron_rule(degree: int):
    """Collapsed Gauss rule on the unit tetrahedron."""
    xu, wu = gauss_legendre(points_for_degree(degree + 2))
    xv, wv = gauss_legendre(points_for_degree(degree + 1))
    xw, ww = gauss_legendre(points_for_degree(degree))
    u, v, w = np.meshgrid(xu, xv, xw, indexing="ij")
    wu_, wv_, ww_ = np.meshgrid(wu, wv, ww, indexing="ij")
    x = u
    y = v * (1.0 - u)
    z = w * (1.0 - u) * (1.0 - v)
    points = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    weights = (wu_ * wv_ * ww_ * (1.0 - u) ** 2 * (1.0 - v)).ravel()
    return _readonly(points, weights)


def reference_rule(kind: str, degree: int):
    """Quadrature rule on the reference cell of an element kind."""
    if kind == "interval":
        return tensor_rule(1, degree)
    if kind == "triangle":
        return triangle_rule(degree)
    if kind == "tetrahedron":
        return tetrahedron_rule(degree)
    if kind == "quadrilateral":
        # bilinear pullback adds one degree per axis through det J
        return tensor_rule(2, degree + 1)
    if kind == "hexahedron":
        return tensor_rule(3, degree + 2)
    raise ValueError(f"Unknown element kind: {kind}")


def simplex_rule(vertices: np.ndarray, degree: int):
    """Physical quadrature points and weights on a simplex given by its vertices."""
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[1]
    kind = SIMPLEX_KINDS[dim - 1]
    ref_points, ref_weights = reference_rule(kind, degree)
    jac = (vertices[1:] - vertices[0]).T
    points = vertices[0] + ref_points @ jac.T
    weights = ref_weights * abs(np.linalg.det(jac))
    return points, weights


def _multilinear_shape(ref_points: np.ndarray, dim: int):
    """Shape functions and reference gradients of the bilinear/trilinear cell."""
    ref_vertices = QUAD_REFERENCE_VERTICES if dim == 2 else HEX_REFERENCE_VERTICES
    npts = ref_points.shape[0]
    nv = ref_vertices.shape[0]
    shape = np.ones((npts, nv))
    grads = np.ones((npts, nv, dim))
    for a in range(nv):
        for d in range(dim):
            factor = np.where(
                ref_vertices[a, d] > 0.5, ref_points[:, d], 1.0 - ref_points[:, d]
            )
            dfactor = 1.0 if ref_vertices[a, d] > 0.5 else -1.0
            shape[:, a] *= factor
            for g in range(dim):
                if g == d:
                    grads[:, a, g] *= dfactor
                else:
                    grads[:, a, g] *= factor
    return shape, grads


def map_multilinear(vertices: np.ndarray, ref_points: np.ndarray):
    """Map reference points through the multilinear cell map; return points and det J."""
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[1]
    shape, grads = _multilinear_shape(ref_points, dim)
    points = shape @ vertices
    jac = np.einsum("pad,ai->pid", grads, vertices)
    return points, np.linalg.det(jac)


def element_rule(kind: str, vertices: np.ndarray, degree: int):
    """Physical quadrature rule on one mesh element."""
    if kind in SIMPLEX_KINDS:
        return simplex_rule(vertices, degree)
    if kind in TENSOR_KINDS:
        ref_points, ref_weights = reference_rule(kind, degree)
        points, det = map_multilinear(vertices, ref_points)
        return points, ref_weights * np.abs(det)
    raise ValueError(f"Unknown element kind: {kind}")


@lru_cache(maxsize=None)
def reference_lattice(kind: str, m: int):
    """Equispaced sample lattice with m intervals per axis on the reference cell."""
    ticks = np.linspace(0.0, 1.0, m + 1)
    if kind == "interval":
        points = ticks[:, None]
    elif kind == "quadrilateral":
        points = np.array([[a, b] for a in ticks for b in ticks])
    elif kind == "hexahedron":
        points = np.array([[a, b, c] for a in ticks for b in ticks for c in ticks])
    elif kind == "triangle":
        points = np.array(
            [[i / m, j / m] for i in range(m + 1) for j in range(m + 1 - i)]
        )
    elif kind == "tetrahedron":
        points = np.array(
            [
                [i / m, j / m, k / m]
                for i in range(m + 1)
                for j in range(m + 1 - i)
                for k in range(m + 1 - i - j)
            ]
        )
    else:
        raise ValueError(f"Unknown element kind: {kind}")
    return _readonly(points)[0]


def element_lattice(kind: str, vertices: np.ndarray, m: int) -> np.ndarray:
    """Equispaced sample points on a physical element."""
    ref_points = reference_lattice(kind, m)
    vertices = np.asarray(vertices, dtype=float)
    if kind in SIMPLEX_KINDS:
        jac = (vertices[1:] - vertices[0]).T
        return vertices[0] + ref_points @ jac.T
    points, _ = map_multilinear(vertices, ref_points)
    return points


def orthonormal_frame(normal: np.ndarray) -> np.ndarray:
    """Rows: the unit normal followed by an orthonormal basis of its complement."""
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    dim = normal.shape[0]
    if dim == 1:
        return normal[None, :]
    if dim == 2:
        return np.array([normal, [-normal[1], normal[0]]])
    axis = np.zeros(3)
    axis[np.argmin(np.abs(normal))] = 1.0
    e1 = np.cross(normal, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return np.array([normal, e1, e2])


def half_ball_rule(
    dim: int,
    radius: float,
    degree: int,
    center=None,
    normal=None,
    side: int = 1,
):
    """
    Quadrature on the half-ball {|x - c| < r, side * (x - c) . normal > 0}.

    Args:
        dim: Space dimension (1, 2 or 3)
        radius: Ball radius
        degree: Polynomial degree to integrate exactly (to machine precision
            for the angular Gauss rule in 2D)
        center: Ball center (default origin)
        normal: Unit normal of the splitting hyperplane (default e_1)
        side: +1 for the half the normal points into, -1 for the other

    Returns:
        Tuple (points, weights)
    """
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    if normal is None:
        normal = np.eye(dim)[0]
    frame = orthonormal_frame(normal)
    axis = side * frame[0]
    rho, w_rho = gauss_legendre(points_for_degree(degree + dim - 1))
    rho = radius * rho
    w_rho = radius * w_rho

    if dim == 1:
        points = center + rho[:, None] * axis
        return points, w_rho.copy()

    if dim == 2:
        n_ang = degree + 20
        psi, w_psi = gauss_legendre(n_ang)
        psi = math.pi * (psi - 0.5)
        w_psi = math.pi * w_psi
        r_, p_ = np.meshgrid(rho, psi, indexing="ij")
        wr_, wp_ = np.meshgrid(w_rho, w_psi, indexing="ij")
        s = (r_ * np.cos(p_)).ravel()
        t = (r_ * np.sin(p_)).ravel()
        points = center + s[:, None] * axis + t[:, None] * frame[1]
        weights = (wr_ * wp_ * r_).ravel()
        return points, weights

    if dim == 3:
        tc, w_tc = gauss_legendre(points_for_degree(degree))
        n_az = degree + 1
        az = 2.0 * math.pi * np.arange(n_az) / n_az
        w_az = np.full(n_az, 2.0 * math.pi / n_az)
        r_, t_, a_ = np.meshgrid(rho, tc, az, indexing="ij")
        wr_, wt_, wa_ = np.meshgrid(w_rho, w_tc, w_az, indexing="ij")
        sin_t = np.sqrt(1.0 - t_**2)
        s = (r_ * t_).ravel()
        u = (r_ * sin_t * np.cos(a_)).ravel()
        v = (r_ * sin_t * np.sin(a_)).ravel()
        points = (
            center + s[:, None] * axis + u[:, None] * frame[1] + v[:, None] * frame[2]
        )
        weights = (wr_ * wt_ * wa_ * r_**2).ravel()
        return points, weights

    raise ValueError(f"Unsupported dimension: {dim}")


def ball_rule(dim: int, radius: float, degree: int, center=None, normal=None):
    """Both halves of a ball split by a hyperplane: (minus_pts, minus_w, plus_pts, plus_w)."""
    minus = half_ball_rule(dim, radius, degree, center, normal, side=-1)
    plus = half_ball_rule(dim, radius, degree, center, normal, side=1)
    return minus[0], minus[1], plus[0], plus[1]
