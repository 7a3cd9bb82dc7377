"""
Conforming meshes of intervals, triangles, quadrilaterals, tetrahedra and
hexahedra.

A Mesh is immutable after construction: coordinate and connectivity arrays
are read-only and derived quantities are computed once on first access.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import geometry
from .errors import MeshError, RadiusFormulaError
from .quadrature import HEX_REFERENCE_VERTICES, QUAD_REFERENCE_VERTICES, element_rule

logger = logging.getLogger(__name__)

KIND_DIMENSION = {
    "interval": 1,
    "triangle": 2,
    "quadrilateral": 2,
    "tetrahedron": 3,
    "hexahedron": 3,
}

VERTEX_COUNT = {
    "interval": 2,
    "triangle": 3,
    "quadrilateral": 4,
    "tetrahedron": 4,
    "hexahedron": 8,
}

# Local facets. Quadrilateral faces of hexahedra are listed in cyclic order.
FACETS = {
    "interval": ((0,), (1,)),
    "triangle": ((0, 1), (1, 2), (2, 0)),
    "quadrilateral": ((0, 1), (1, 2), (2, 3), (3, 0)),
    "tetrahedron": ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)),
    "hexahedron": (
        (0, 3, 2, 1),
        (4, 5, 6, 7),
        (0, 1, 5, 4),
        (1, 2, 6, 5),
        (2, 3, 7, 6),
        (3, 0, 4, 7),
    ),
}

EDGES = {
    "interval": ((0, 1),),
    "triangle": ((0, 1), (1, 2), (2, 0)),
    "quadrilateral": ((0, 1), (1, 2), (2, 3), (3, 0)),
    "tetrahedron": ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
    "hexahedron": (
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 0),
        (4, 5),
        (5, 6),
        (6, 7),
        (7, 4),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ),
}


# Simplicial splits used for point location.
SIMPLEX_SPLIT = {
    "interval": ((0, 1),),
    "triangle": ((0, 1, 2),),
    "quadrilateral": ((0, 1, 2), (0, 2, 3)),
    "tetrahedron": ((0, 1, 2, 3),),
    "hexahedron": (
        (0, 1, 2, 6),
        (0, 1, 5, 6),
        (0, 3, 2, 6),
        (0, 3, 7, 6),
        (0, 4, 5, 6),
        (0, 4, 7, 6),
    ),
}

@dataclass(frozen=True)
class Interface:
    """An interior facet shared by two elements, oriented from left to right."""

    id: int
    left: int
    right: int
    point: np.ndarray
    facet_vertices: Tuple[int, ...]
    measure: float
    normal: np.ndarray


@dataclass(frozen=True)
class QualityReport:
    h: float
    h_min: float
    min_angle: Optional[float]
    min_dihedral: Optional[float]
    sigma: float
    quasi_uniformity_ratio: float
    safe_radius: Optional[float]
    safe_radius_note: Optional[str]
    measured_clearance: Optional[float]
    gamma_summary: Optional[geometry.GammaSummary] = None

    def to_dict(self) -> dict:
        data = {
            "h": self.h,
            "h_min": self.h_min,
            "min_angle": self.min_angle,
            "min_dihedral": self.min_dihedral,
            "sigma": self.sigma,
            "quasi_uniformity_ratio": self.quasi_uniformity_ratio,
            "safe_radius": self.safe_radius,
            "safe_radius_note": self.safe_radius_note,
            "measured_clearance": self.measured_clearance,
        }
        if self.gamma_summary is not None:
            data["empirical_gamma"] = self.gamma_summary.max_ratio
            data["gamma_inapplicable"] = self.gamma_summary.inapplicable
        return data


class Mesh:
    """
    Conforming mesh in one, two or three dimensions.

    Args:
        dimension: Space dimension n
        kind: Element kind, consistent with n
        vertices: (N, n) vertex coordinates
        elements: (M, k) vertex indices per element
        validate: Check conformity (facet sharing, hanging nodes) and
            quadrilateral convexity. Degeneracy is always checked.
        tolerance_factor: Geometric predicates use tolerance_factor * h

    Raises:
        MeshError: On kind/dimension mismatch, malformed connectivity,
            non-conforming facets, degenerate or non-convex elements
    """

    def __init__(
        self,
        dimension: int,
        kind: str,
        vertices,
        elements,
        validate: bool = True,
        tolerance_factor: float = 1e-12,
    ):
        if kind not in KIND_DIMENSION:
            raise MeshError(f"Unknown element kind: {kind}")
        if KIND_DIMENSION[kind] != dimension:
            raise MeshError(
                f"element kind {kind} requires dimension {KIND_DIMENSION[kind]}, "
                f"got {dimension}"
            )
        vertices = np.array(vertices, dtype=float)
        if vertices.ndim == 1 and dimension == 1:
            vertices = vertices[:, None]
        elements = np.array(elements, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != dimension:
            raise MeshError(
                f"vertices must have shape (N, {dimension}), got {vertices.shape}"
            )
        if elements.ndim != 2 or elements.shape[1] != VERTEX_COUNT[kind]:
            raise MeshError(
                f"{kind} elements need {VERTEX_COUNT[kind]} vertices each, "
                f"got shape {elements.shape}"
            )
        if elements.shape[0] == 0:
            raise MeshError("mesh has no elements")
        if elements.min() < 0 or elements.max() >= vertices.shape[0]:
            raise MeshError("element references a vertex index out of range")

        vertices.setflags(write=False)
        elements.setflags(write=False)
        self.dimension = dimension
        self.kind = kind
        self.vertices = vertices
        self.elements = elements
        self.tolerance_factor = tolerance_factor

        self._check_degenerate()
        if validate:
            if kind == "quadrilateral":
                self._check_convex()
            self._check_conforming()

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __repr__(self) -> str:
        return (
            f"Mesh(dimension={self.dimension}, kind={self.kind!r}, "
            f"elements={len(self)}, vertices={self.vertices.shape[0]})"
        )

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    def element_vertices(self, element_id: int) -> np.ndarray:
        return self.vertices[self.elements[element_id]]

    def contains(self, element_id: int, points, tol: Optional[float] = None) -> np.ndarray:
        """Mask of points lying in a closed element, up to a relative tolerance."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tol = 1e-10 if tol is None else tol
        v = self.element_vertices(element_id)
        mask = np.zeros(points.shape[0], dtype=bool)
        for simplex in SIMPLEX_SPLIT[self.kind]:
            mask |= geometry.points_in_simplex(v[list(simplex)], points, tol)
        return mask

    @cached_property
    def measures(self) -> np.ndarray:
        values = np.array(
            [
                element_rule(self.kind, self.element_vertices(e), 0)[1].sum()
                for e in range(self.num_elements)
            ]
        )
        values.setflags(write=False)
        return values

    @cached_property
    def diameters(self) -> np.ndarray:
        values = np.array(
            [geometry.diameter(self.element_vertices(e)) for e in range(self.num_elements)]
        )
        values.setflags(write=False)
        return values

    @cached_property
    def centroids(self) -> np.ndarray:
        """Vertex averages (the barycenter for simplices)."""
        values = self.vertices[self.elements].mean(axis=1)
        values.setflags(write=False)
        return values

    @cached_property
    def h(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        pairs = np.array(EDGES[self.kind])
        a = self.vertices[self.elements[:, pairs[:, 0]]]
        b = self.vertices[self.elements[:, pairs[:, 1]]]
        return np.linalg.norm(a - b, axis=-1)

    @cached_property
    def h_min(self) -> float:
        """Least edge length over all elements."""
        return float(self.edge_lengths.min())

    @cached_property
    def tolerance(self) -> float:
        return self.tolerance_factor * self.h

    @cached_property
    def _facet_map(self) -> Dict[Tuple[int, ...], List[Tuple[int, int]]]:
        facet_map: Dict[Tuple[int, ...], List[Tuple[int, int]]] = {}
        for e, element in enumerate(self.elements):
            for f, local in enumerate(FACETS[self.kind]):
                key = tuple(sorted(int(element[i]) for i in local))
                facet_map.setdefault(key, []).append((e, f))
        return facet_map

    def _check_degenerate(self) -> None:
        tol = self.tolerance_factor * self.h**self.dimension
        bad = np.nonzero(self.measures <= tol)[0]
        if bad.size:
            raise MeshError(
                f"degenerate element {int(bad[0])}: measure {self.measures[bad[0]]:.3e}"
            )

    def _check_convex(self) -> None:
        for e in range(self.num_elements):
            v = self.element_vertices(e)
            edges = np.roll(v, -1, axis=0) - v
            cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(
                edges, -1, axis=0
            )[:, 0]
            tol = self.tolerance_factor * self.h**2
            if not ((cross > tol).all() or (cross < -tol).all()):
                raise MeshError(f"non-convex quadrilateral element {e}")

    def _facet_pieces(self, element_id: int, local_facet: int) -> List[np.ndarray]:
        """Simplicial pieces of a facet (quadrilateral faces split in two)."""
        local = FACETS[self.kind][local_facet]
        coords = self.vertices[self.elements[element_id][list(local)]]
        if len(local) == 4:
            return [coords[[0, 1, 2]], coords[[0, 2, 3]]]
        return [coords]

    def _check_conforming(self) -> None:
        for key, owners in self._facet_map.items():
            if len(owners) > 2:
                raise MeshError(
                    f"non-conforming mesh: facet {key} shared by {len(owners)} elements"
                )
        if self.dimension == 1:
            return
        tol = self.tolerance
        for key, owners in self._facet_map.items():
            if len(owners) != 1:
                continue
            e, f = owners[0]
            others = np.setdiff1d(np.arange(self.vertices.shape[0]), key)
            points = self.vertices[others]
            for piece in self._facet_pieces(e, f):
                lo = piece.min(axis=0) - tol
                hi = piece.max(axis=0) + tol
                near = points[((points >= lo) & (points <= hi)).all(axis=1)]
                if near.size == 0:
                    continue
                spans = (piece[1:] - piece[0]).T
                lam, *_ = np.linalg.lstsq(spans, (near - piece[0]).T, rcond=None)
                residual = np.linalg.norm(near - piece[0] - (spans @ lam).T, axis=1)
                inside = (lam >= -1e-9).all(axis=0) & (lam.sum(axis=0) <= 1 + 1e-9)
                if np.any((residual <= tol) & inside):
                    raise MeshError(
                        f"non-conforming mesh: hanging node on facet {key}"
                    )

    def _facet_normal(self, facet_coords: np.ndarray) -> np.ndarray:
        if self.dimension == 1:
            return np.array([1.0])
        if self.dimension == 2:
            t = facet_coords[1] - facet_coords[0]
            n = np.array([t[1], -t[0]])
        else:
            n = np.cross(facet_coords[1] - facet_coords[0], facet_coords[2] - facet_coords[0])
        return n / np.linalg.norm(n)

    @cached_property
    def interfaces(self) -> Tuple[Interface, ...]:
        """Interior interfaces sorted by (left, right) element ids."""
        shared = []
        for key, owners in self._facet_map.items():
            if len(owners) != 2:
                continue
            (e0, f0), (e1, _) = sorted(owners)
            shared.append((e0, e1, f0, key))
        shared.sort()

        interfaces = []
        for i, (left, right, f_left, key) in enumerate(shared):
            local = FACETS[self.kind][f_left]
            ordered = tuple(int(self.elements[left][j]) for j in local)
            coords = self.vertices[list(ordered)]
            point = coords.mean(axis=0)
            if self.dimension == 1:
                measure = 1.0
            elif len(ordered) == 4:
                measure = geometry.simplex_measure(coords[[0, 1, 2]]) + geometry.simplex_measure(
                    coords[[0, 2, 3]]
                )
            else:
                measure = geometry.simplex_measure(coords)
            normal = self._facet_normal(coords)
            if np.dot(self.centroids[right] - self.centroids[left], normal) < 0:
                normal = -normal
            point.setflags(write=False)
            normal.setflags(write=False)
            interfaces.append(
                Interface(
                    id=i,
                    left=left,
                    right=right,
                    point=point,
                    facet_vertices=ordered,
                    measure=float(measure),
                    normal=normal,
                )
            )
        return tuple(interfaces)

    @cached_property
    def boundary_facet_count(self) -> int:
        return sum(1 for owners in self._facet_map.values() if len(owners) == 1)

    def elements_of_vertex(self) -> List[List[int]]:
        table: List[List[int]] = [[] for _ in range(self.vertices.shape[0])]
        for e, element in enumerate(self.elements):
            for v in element:
                table[int(v)].append(e)
        return table


def interior_interfaces(mesh: Mesh) -> List[Interface]:
    """Facets shared by two elements, sorted by (left, right) element ids."""
    return list(mesh.interfaces)


def _check_domain(domain, n: int) -> np.ndarray:
    box = np.array(domain, dtype=float)
    if box.ndim == 1:
        box = box.reshape(-1, 2)
    if box.shape != (n, 2):
        raise MeshError(f"domain must give (low, high) for {n} axes, got {domain}")
    if np.any(box[:, 1] <= box[:, 0]):
        raise MeshError(f"domain bounds must satisfy low < high, got {domain}")
    return box


def build_structured_mesh(
    domain, n: int, divisions: Union[int, Sequence[int]], kind: str
) -> Mesh:
    """
    Uniform mesh of an axis-aligned box.

    Args:
        domain: Per-axis (low, high) bounds, e.g. ((0, 1), (0, 1))
        n: Space dimension
        divisions: Cells per axis (an int applies to every axis)
        kind: Element kind. Triangles split each cell along the diagonal from
            its lowest to its highest corner; tetrahedra split each cube into
            six path (Kuhn) tetrahedra sharing that diagonal.

    Example:
        >>> mesh = build_structured_mesh((0, 1), 1, 4, "interval")
        >>> mesh.h, mesh.h_min
        (0.25, 0.25)
    """
    if kind not in KIND_DIMENSION:
        raise MeshError(f"Unknown element kind: {kind}")
    if KIND_DIMENSION[kind] != n:
        raise MeshError(f"element kind {kind} does not match dimension {n}")
    box = _check_domain(domain, n)
    counts = [int(divisions)] * n if np.isscalar(divisions) else [int(d) for d in divisions]
    if len(counts) != n or min(counts) < 1:
        raise MeshError(f"divisions must be >= 1 per axis, got {divisions}")

    axes = [np.linspace(box[d, 0], box[d, 1], counts[d] + 1) for d in range(n)]
    grid = np.meshgrid(*axes, indexing="ij")
    vertices = np.stack([g.ravel() for g in grid], axis=1)
    shape = tuple(c + 1 for c in counts)

    def vid(index) -> int:
        return int(np.ravel_multi_index(tuple(index), shape))

    corners = HEX_REFERENCE_VERTICES if n == 3 else QUAD_REFERENCE_VERTICES
    if n == 1:
        corners = np.array([[0.0], [1.0]])
    corners = corners.astype(int)

    elements = []
    for cell in itertools.product(*[range(c) for c in counts]):
        base = np.array(cell)
        ids = [vid(base + c) for c in corners]
        if kind in ("interval", "quadrilateral", "hexahedron"):
            elements.append(ids)
        elif kind == "triangle":
            v00, v10, v11, v01 = ids
            elements.append([v00, v10, v11])
            elements.append([v00, v11, v01])
        else:
            for perm in itertools.permutations(range(3)):
                path = [base.copy()]
                for axis in perm:
                    step = path[-1].copy()
                    step[axis] += 1
                    path.append(step)
                elements.append([vid(p) for p in path])
    return Mesh(n, kind, vertices, elements, validate=False)


def build_graded_mesh_1d(domain, divisions: int, ratio: float) -> Mesh:
    """
    Geometrically graded 1D mesh: consecutive element lengths grow by ``ratio``.

    Raises:
        MeshError: If divisions < 1 or ratio <= 0
    """
    if divisions < 1:
        raise MeshError(f"divisions must be >= 1, got {divisions}")
    if ratio <= 0:
        raise MeshError(f"ratio must be > 0, got {ratio}")
    low, high = _check_domain(domain, 1)[0]
    lengths = ratio ** np.arange(divisions)
    nodes = low + (high - low) * np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum()
    nodes[-1] = high
    elements = [[i, i + 1] for i in range(divisions)]
    return Mesh(1, "interval", nodes[:, None], elements, validate=False)


def _tensor_children(mesh: Mesh):
    """Split intervals, quadrilaterals and hexahedra into 2^n children."""
    n = mesh.dimension
    if n == 1:
        corners = np.array([[0], [1]])
    elif n == 2:
        corners = QUAD_REFERENCE_VERTICES.astype(int)
    else:
        corners = HEX_REFERENCE_VERTICES.astype(int)

    points: Dict[Tuple[int, ...], int] = {}
    coords = [row for row in mesh.vertices]
    for v in range(mesh.vertices.shape[0]):
        points[(v,)] = v

    elements = []
    for element in mesh.elements:
        local_ids = {}
        for sub in itertools.product(range(3), repeat=n):
            members = [
                int(element[a])
                for a, corner in enumerate(corners)
                if all(sub[d] == 1 or corner[d] * 2 == sub[d] for d in range(n))
            ]
            key = tuple(sorted(members))
            if key not in points:
                points[key] = len(coords)
                coords.append(mesh.vertices[list(key)].mean(axis=0))
            local_ids[sub] = points[key]
        for child in itertools.product(range(2), repeat=n):
            elements.append(
                [local_ids[tuple(child[d] + c[d] for d in range(n))] for c in corners]
            )
    return np.array(coords), elements


def _simplex_children(mesh: Mesh):
    """Red refinement of triangles; eight-child refinement of tetrahedra."""
    midpoints: Dict[Tuple[int, int], int] = {}
    coords = [row for row in mesh.vertices]

    def mid(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in midpoints:
            midpoints[key] = len(coords)
            coords.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
        return midpoints[key]

    elements = []
    for element in mesh.elements:
        x = [int(v) for v in element]
        if mesh.kind == "triangle":
            m01, m12, m02 = mid(x[0], x[1]), mid(x[1], x[2]), mid(x[0], x[2])
            elements += [
                [x[0], m01, m02],
                [m01, x[1], m12],
                [m02, m12, x[2]],
                [m01, m12, m02],
            ]
        else:
            m = {(i, j): mid(x[i], x[j]) for i in range(4) for j in range(i + 1, 4)}
            # vertex order of the children keeps path tetrahedra congruent
            elements += [
                [x[0], m[0, 1], m[0, 2], m[0, 3]],
                [m[0, 1], x[1], m[1, 2], m[1, 3]],
                [m[0, 2], m[1, 2], x[2], m[2, 3]],
                [m[0, 3], m[1, 3], m[2, 3], x[3]],
                [m[0, 1], m[0, 2], m[0, 3], m[1, 3]],
                [m[0, 1], m[0, 2], m[1, 2], m[1, 3]],
                [m[0, 2], m[0, 3], m[1, 3], m[2, 3]],
                [m[0, 2], m[1, 2], m[1, 3], m[2, 3]],
            ]
    return np.array(coords), elements


def refine_uniform(mesh: Mesh) -> Mesh:
    """
    Split every element into 2^n children through edge midpoints.

    Raises:
        MeshError: For unsupported element kinds
    """
    if mesh.kind in ("interval", "quadrilateral", "hexahedron"):
        coords, elements = _tensor_children(mesh)
    elif mesh.kind in ("triangle", "tetrahedron"):
        coords, elements = _simplex_children(mesh)
    else:
        raise MeshError(f"cannot refine element kind {mesh.kind}")
    logger.debug("refined %s mesh: %d -> %d elements", mesh.kind, len(mesh), len(elements))
    return Mesh(
        mesh.dimension,
        mesh.kind,
        coords,
        elements,
        validate=False,
        tolerance_factor=mesh.tolerance_factor,
    )


def load_mesh(path: Union[str, Path], tolerance_factor: float = 1e-12) -> Mesh:
    """
    Load a mesh from its JSON file.

    Raises:
        MeshError: Malformed file, non-conforming connectivity or degenerate element
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise MeshError(f"malformed mesh file {path}: {e}") from e
    return mesh_from_dict(data, tolerance_factor=tolerance_factor)


def mesh_from_dict(data: dict, tolerance_factor: float = 1e-12) -> Mesh:
    if not isinstance(data, dict):
        raise MeshError("malformed mesh: expected a JSON object")
    missing = [k for k in ("dimension", "kind", "vertices", "elements") if k not in data]
    if missing:
        raise MeshError(f"malformed mesh: missing keys {missing}")
    try:
        return Mesh(
            int(data["dimension"]),
            str(data["kind"]),
            data["vertices"],
            data["elements"],
            validate=True,
            tolerance_factor=tolerance_factor,
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, MeshError):
            raise
        raise MeshError(f"malformed mesh: {e}") from e


def mesh_to_json(mesh: Mesh) -> str:
    """JSON text with vertex coordinates written to 17 significant digits."""
    vertex_rows = ",\n    ".join(
        "[" + ", ".join(format(float(c), ".17g") for c in row) + "]" for row in mesh.vertices
    )
    element_rows = ",\n    ".join(
        "[" + ", ".join(str(int(v)) for v in row) + "]" for row in mesh.elements
    )
    return (
        "{\n"
        f'  "dimension": {mesh.dimension},\n'
        f'  "kind": "{mesh.kind}",\n'
        f'  "vertices": [\n    {vertex_rows}\n  ],\n'
        f'  "elements": [\n    {element_rows}\n  ]\n'
        "}\n"
    )


def save_mesh(mesh: Mesh, path: Union[str, Path]) -> None:
    Path(path).write_text(mesh_to_json(mesh))


def element_angles(mesh: Mesh, element_id: int) -> np.ndarray:
    """Angles between edges meeting at a vertex, within each 2D face."""
    v = mesh.element_vertices(element_id)
    if mesh.kind == "triangle":
        return geometry.polygon_corner_angles(v)
    if mesh.kind == "quadrilateral":
        return geometry.polygon_corner_angles(v)
    if mesh.kind == "tetrahedron":
        return np.concatenate(
            [geometry.polygon_corner_angles(v[list(face)]) for face in FACETS["tetrahedron"]]
        )
    if mesh.kind == "hexahedron":
        return np.concatenate(
            [geometry.polygon_corner_angles(v[list(face)]) for face in FACETS["hexahedron"]]
        )
    return np.array([])


def _element_sigma(mesh: Mesh, element_id: int) -> float:
    v = mesh.element_vertices(element_id)
    h_t = mesh.diameters[element_id]
    if mesh.kind == "interval":
        return 1.0
    if mesh.kind in ("triangle", "tetrahedron"):
        return h_t / (2.0 * geometry.simplex_inradius(v))
    if mesh.kind == "quadrilateral":
        corners = [v[[(i - 1) % 4, i, (i + 1) % 4]] for i in range(4)]
    else:
        neighbours = {i: [] for i in range(8)}
        for a, b in EDGES["hexahedron"]:
            neighbours[a].append(b)
            neighbours[b].append(a)
        corners = [v[[i] + neighbours[i]] for i in range(8)]
    # rho = 2 * smallest in-diameter over the corner sub-simplices
    rho = 2.0 * min(2.0 * geometry.simplex_inradius(c) for c in corners)
    return h_t / rho


def safe_disk_radius(
    mesh: Mesh, gamma: float = 1.0, min_angle: Optional[float] = None
) -> float:
    """
    Radius of the interface balls guaranteed to stay inside their covolumes.

    n=1: h_min / 4. n=2: h_min sin(theta0 / 2) / 4. n=3:
    h_min sin(beta0 / 2) sin(beta0) sqrt(1 - 9 gamma^2 cos^2 beta0) / 3.

    Raises:
        RadiusFormulaError: n=3 with gamma * cos(beta0) >= 1/3
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if mesh.dimension == 1:
        return mesh.h_min / 4.0
    if min_angle is None:
        min_angle = min(float(element_angles(mesh, e).min()) for e in range(len(mesh)))
    if mesh.dimension == 2:
        return 0.25 * mesh.h_min * math.sin(min_angle / 2.0)
    c = gamma * math.cos(min_angle)
    if c >= 1.0 / 3.0:
        raise RadiusFormulaError(
            f"radius formula inapplicable: gamma*cos(beta0) = {c:.6g} >= 1/3 "
            f"(beta0 = {min_angle:.6g} rad, gamma = {gamma:.6g})"
        )
    g = math.sqrt(1.0 - 9.0 * c * c)
    return mesh.h_min * math.sin(min_angle / 2.0) * math.sin(min_angle) * g / 3.0


def mesh_angle_ratios(mesh: Mesh) -> List[geometry.AngleInequalityResult]:
    """Dihedral-angle ratios for every interior face edge of a tetrahedral mesh."""
    if mesh.kind != "tetrahedron":
        return []
    results = []
    for iface in mesh.interfaces:
        face = list(iface.facet_vertices)
        for element_id in (iface.left, iface.right):
            apex = [int(v) for v in mesh.elements[element_id] if int(v) not in face][0]
            for i in range(3):
                a, d, c = face[i], face[(i + 1) % 3], face[(i + 2) % 3]
                results.append(
                    geometry.verify_angle_inequality(
                        mesh.vertices[a], mesh.vertices[d], mesh.vertices[c], mesh.vertices[apex]
                    )
                )
    return results


def quality_metrics(mesh: Mesh, gamma: float = 1.0) -> QualityReport:
    """
    Shape-regularity report: angles, sigma, quasi-uniformity and safe radii.

    The measured clearance is the least distance from an interface point to
    the boundary of its covolume.
    """
    from .dual import build_dual_covolume, covolume_clearance

    min_angle = None
    min_dihedral = None
    if mesh.dimension > 1:
        min_angle = min(float(element_angles(mesh, e).min()) for e in range(len(mesh)))
    if mesh.kind == "tetrahedron":
        min_dihedral = min(
            float(geometry.tetra_dihedral_angles(mesh.element_vertices(e)).min())
            for e in range(len(mesh))
        )
    elif mesh.kind == "hexahedron":
        min_dihedral = min(
            float(_hex_dihedral(mesh.element_vertices(e)).min()) for e in range(len(mesh))
        )

    sigma = max(_element_sigma(mesh, e) for e in range(len(mesh)))

    note = None
    try:
        radius = safe_disk_radius(mesh, gamma=gamma, min_angle=min_angle)
    except RadiusFormulaError as e:
        logger.warning("%s", e)
        radius = None
        note = str(e)

    clearance = None
    if mesh.interfaces:
        clearance = float(covolume_clearance(build_dual_covolume(mesh)).min())

    gamma_summary = None
    if mesh.kind == "tetrahedron":
        gamma_summary = geometry.empirical_gamma(mesh_angle_ratios(mesh))

    return QualityReport(
        h=mesh.h,
        h_min=mesh.h_min,
        min_angle=min_angle,
        min_dihedral=min_dihedral,
        sigma=float(sigma),
        quasi_uniformity_ratio=mesh.h / mesh.h_min,
        safe_radius=radius,
        safe_radius_note=note,
        measured_clearance=clearance,
        gamma_summary=gamma_summary,
    )


def _hex_dihedral(v: np.ndarray) -> np.ndarray:
    angles = []
    faces = FACETS["hexahedron"]
    for i, j in itertools.combinations(range(6), 2):
        shared = set(faces[i]) & set(faces[j])
        if len(shared) != 2:
            continue
        a, b = (v[k] for k in shared)
        axis = (b - a) / np.linalg.norm(b - a)
        ci = v[list(faces[i])].mean(axis=0) - a
        cj = v[list(faces[j])].mean(axis=0) - a
        ci -= np.dot(ci, axis) * axis
        cj -= np.dot(cj, axis) * axis
        angles.append(geometry.angle_between(ci, cj))
    return np.array(angles)
