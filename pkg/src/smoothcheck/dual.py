"""
Dual covolume meshes.

Each element receives an added interior point (midpoint, barycenter,
diagonal intersection or vertex average). Joining the added point to a facet
gives a half-covolume inside the element; the two halves on either side of an
interior facet form that interface's covolume.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np

from . import geometry
from .errors import MeshError
from .mesh import FACETS, Mesh
from .quadrature import simplex_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HalfCovolume:
    """Cone from an element's added point over one facet, split into simplices."""

    element: int
    pieces: Tuple[np.ndarray, ...]
    # lateral boundary: simplices joining the facet boundary to the added point
    boundary: Tuple[np.ndarray, ...]

    @property
    def measure(self) -> float:
        return float(sum(geometry.simplex_measure(p) for p in self.pieces))


@dataclass(frozen=True)
class Covolume:
    interface_id: int
    left: HalfCovolume
    right: HalfCovolume

    @property
    def halves(self) -> Tuple[HalfCovolume, HalfCovolume]:
        return (self.left, self.right)

    @property
    def measure(self) -> float:
        return self.left.measure + self.right.measure


def added_point(mesh: Mesh, element_id: int) -> np.ndarray:
    """
    Interior point joined to the facets of an element.

    Raises:
        MeshError: For a quadrilateral whose diagonals do not cross strictly inside
    """
    v = mesh.element_vertices(element_id)
    if mesh.kind != "quadrilateral":
        return v.mean(axis=0)
    # v0 + s (v2 - v0) = v1 + t (v3 - v1)
    matrix = np.column_stack([v[2] - v[0], v[1] - v[3]])
    if abs(np.linalg.det(matrix)) <= mesh.tolerance_factor * mesh.h**2:
        raise MeshError(f"non-convex quadrilateral element {element_id}: parallel diagonals")
    s, t = np.linalg.solve(matrix, v[1] - v[0])
    if not (0.0 < s < 1.0 and 0.0 < t < 1.0):
        raise MeshError(
            f"non-convex quadrilateral element {element_id}: "
            f"diagonals intersect outside (s={s:.6g}, t={t:.6g})"
        )
    return v[0] + s * (v[2] - v[0])


class DualMesh:
    """Covolumes of the interior interfaces of a primal mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        points = np.array([added_point(mesh, e) for e in range(len(mesh))])
        points.setflags(write=False)
        self.added_points = points
        self.covolumes: Tuple[Covolume, ...] = tuple(
            Covolume(
                interface_id=iface.id,
                left=self._half(iface.left, iface.facet_vertices),
                right=self._half(iface.right, iface.facet_vertices),
            )
            for iface in mesh.interfaces
        )

    def __len__(self) -> int:
        return len(self.covolumes)

    def _half(self, element_id: int, facet: Tuple[int, ...]) -> HalfCovolume:
        coords = self.mesh.vertices[list(facet)]
        apex = self.added_points[element_id]
        n = self.mesh.dimension
        if n == 1:
            pieces = (np.array([coords[0], apex]),)
            boundary = (apex[None, :],)
        elif n == 2:
            pieces = (np.array([coords[0], coords[1], apex]),)
            boundary = (np.array([coords[0], apex]), np.array([coords[1], apex]))
        else:
            if len(facet) == 4:
                pieces = (
                    np.array([coords[0], coords[1], coords[2], apex]),
                    np.array([coords[0], coords[2], coords[3], apex]),
                )
            else:
                pieces = (np.array([coords[0], coords[1], coords[2], apex]),)
            m = len(facet)
            boundary = tuple(
                np.array([coords[j], coords[(j + 1) % m], apex]) for j in range(m)
            )
        return HalfCovolume(element=element_id, pieces=pieces, boundary=boundary)

    def covolume_rule(self, index: int, degree: int):
        """
        Quadrature over one covolume.

        Returns:
            Tuple (points, weights, elements) where elements[k] is the primal
            element containing points[k]
        """
        points, weights, owners = [], [], []
        for half in self.covolumes[index].halves:
            for piece in half.pieces:
                p, w = simplex_rule(piece, degree)
                points.append(p)
                weights.append(w)
                owners.append(np.full(len(w), half.element))
        return np.vstack(points), np.concatenate(weights), np.concatenate(owners)

    def contains(self, index: int, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Mask of points lying in the closed covolume (within tol in barycentrics)."""
        points = np.atleast_2d(points)
        mask = np.zeros(points.shape[0], dtype=bool)
        for half in self.covolumes[index].halves:
            for piece in half.pieces:
                mask |= geometry.points_in_simplex(piece, points, tol)
        return mask

    def strictly_contains(self, index: int, points: np.ndarray, margin: float) -> np.ndarray:
        """Mask of points lying in the covolume at distance > margin from its boundary."""
        points = np.atleast_2d(points)
        inside = self.contains(index, points, tol=0.0)
        result = np.zeros(points.shape[0], dtype=bool)
        for k in np.nonzero(inside)[0]:
            result[k] = _distance_to_boundary(self.covolumes[index], points[k]) > margin
        return result

    @cached_property
    def boundary_remainder_measure(self) -> float:
        """Total measure of the cones over boundary facets."""
        total = 0.0
        mesh = self.mesh
        for e, element in enumerate(mesh.elements):
            for f, local in enumerate(FACETS[mesh.kind]):
                key = tuple(sorted(int(element[i]) for i in local))
                if len(mesh._facet_map[key]) == 1:
                    half = self._half(e, tuple(int(element[i]) for i in local))
                    total += half.measure
        return total


def build_dual_covolume(mesh: Mesh) -> DualMesh:
    """Dual covolume mesh of the interior interfaces."""
    dual = DualMesh(mesh)
    logger.debug("built %d covolumes for %r", len(dual), mesh)
    return dual


def _distance_to_boundary(covolume: Covolume, point: np.ndarray) -> float:
    distances: List[float] = []
    for half in covolume.halves:
        for face in half.boundary:
            if face.shape[0] == 1:
                distances.append(float(np.linalg.norm(point - face[0])))
            elif face.shape[0] == 2:
                distances.append(geometry.point_segment_distance(point, face[0], face[1]))
            else:
                distances.append(
                    geometry.point_triangle_distance(point, face[0], face[1], face[2])
                )
    return min(distances)


def covolume_clearance(dual: DualMesh) -> np.ndarray:
    """Distance from each interface point to the boundary of its covolume."""
    interfaces = dual.mesh.interfaces
    return np.array(
        [
            _distance_to_boundary(cov, interfaces[cov.interface_id].point)
            for cov in dual.covolumes
        ]
    )
