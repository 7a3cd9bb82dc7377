"""
Multi-index polynomial calculus and piecewise polynomial fields.

On every element the field is expanded in the centered-scaled monomial basis
((x - x_T) / h_T)^alpha, |alpha| <= p, where x_T is the element centroid and
h_T its diameter. Basis functions are ordered graded-lexicographically.
"""

import itertools
import json
import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import FieldError
from .mesh import Interface, Mesh, load_mesh, mesh_from_dict, mesh_to_json

logger = logging.getLogger(__name__)


class MultiIndex(tuple):
    """Tuple of non-negative integers (alpha_1, ..., alpha_n)."""

    def __new__(cls, components: Sequence[int]):
        components = tuple(int(c) for c in components)
        if any(c < 0 for c in components):
            raise ValueError(f"multi-index components must be >= 0, got {components}")
        return super().__new__(cls, components)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(c) for c in self)

    def __repr__(self) -> str:
        return f"MultiIndex{tuple(self)}"


@lru_cache(maxsize=None)
def _indices(n: int, p: int) -> Tuple[MultiIndex, ...]:
    result = []
    for k in range(p + 1):
        level = [c for c in itertools.product(range(k + 1), repeat=n) if sum(c) == k]
        result.extend(MultiIndex(c) for c in sorted(level, reverse=True))
    return tuple(result)


def enumerate_multi_indices(n: int, p: int) -> List[MultiIndex]:
    """
    All multi-indices of order 0..p in graded-lexicographic order.

    Example:
        >>> enumerate_multi_indices(2, 1)
        [MultiIndex(0, 0), MultiIndex(1, 0), MultiIndex(0, 1)]
    """
    if n not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {n}")
    if p < 0:
        raise ValueError(f"degree must be >= 0, got {p}")
    return list(_indices(n, p))


def space_dimension(n: int, p: int) -> int:
    """dim P_p in n variables = C(p + n, n)."""
    return math.comb(p + n, n)


@lru_cache(maxsize=None)
def _exponents(n: int, p: int) -> np.ndarray:
    array = np.array(_indices(n, p), dtype=np.int64).reshape(-1, n)
    array.setflags(write=False)
    return array


def monomial_matrix(local: np.ndarray, p: int, derivative: Optional[Sequence[int]] = None):
    """
    Values (or a derivative) of xi^alpha for all |alpha| <= p at local points.

    Args:
        local: (npts, n) local coordinates xi
        p: Degree
        derivative: Multi-index beta of the derivative in xi (None = values)

    Returns:
        (npts, C(p+n, n)) matrix
    """
    local = np.atleast_2d(local)
    n = local.shape[1]
    exps = _exponents(n, p)
    if derivative is None:
        derivative = (0,) * n
    beta = np.asarray(derivative, dtype=np.int64)
    reduced = exps - beta
    valid = (reduced >= 0).all(axis=1)
    factors = np.ones(exps.shape[0])
    for j in np.nonzero(valid)[0]:
        factors[j] = math.prod(
            math.factorial(int(a)) // math.factorial(int(a - b))
            for a, b in zip(exps[j], beta)
        )
    powers = np.ones((local.shape[0], exps.shape[0]))
    for d in range(n):
        powers *= local[:, d : d + 1] ** np.clip(reduced[:, d], 0, None)[None, :]
    return powers * (factors * valid)[None, :]


class PiecewisePolyField:
    """
    Piecewise polynomial of total degree p on a mesh.

    Args:
        mesh: The mesh
        degree: Polynomial degree p
        coefficients: (num_elements, C(p+n, n)) coefficients in the
            centered-scaled basis

    Raises:
        FieldError: If the coefficient array does not match mesh and degree
    """

    def __init__(self, mesh: Mesh, degree: int, coefficients):
        if degree < 0:
            raise FieldError(f"degree must be >= 0, got {degree}")
        coefficients = np.array(coefficients, dtype=float)
        expected = (len(mesh), space_dimension(mesh.dimension, degree))
        if coefficients.shape != expected:
            raise FieldError(
                f"coefficients must have shape {expected}, got {coefficients.shape}"
            )
        coefficients.setflags(write=False)
        self.mesh = mesh
        self.degree = degree
        self.coefficients = coefficients
        self.indices = enumerate_multi_indices(mesh.dimension, degree)

    @classmethod
    def zeros(cls, mesh: Mesh, degree: int) -> "PiecewisePolyField":
        return cls(mesh, degree, np.zeros((len(mesh), space_dimension(mesh.dimension, degree))))

    def scaled(self, factor: float) -> "PiecewisePolyField":
        return PiecewisePolyField(self.mesh, self.degree, factor * self.coefficients)

    def local_coordinates(self, element_id: int, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return (points - self.mesh.centroids[element_id]) / self.mesh.diameters[element_id]

    def basis(self, element_id: int, points, alpha: Optional[Sequence[int]] = None) -> np.ndarray:
        """Basis values (or physical derivative alpha) at points of one element."""
        local = self.local_coordinates(element_id, points)
        matrix = monomial_matrix(local, self.degree, alpha)
        if alpha is not None and sum(alpha) > 0:
            matrix = matrix / self.mesh.diameters[element_id] ** sum(alpha)
        return matrix

    def evaluate(
        self, element_id: int, points, alpha: Optional[Sequence[int]] = None
    ) -> np.ndarray:
        """Field (or derivative) values at points, using element_id's polynomial."""
        return self.basis(element_id, points, alpha) @ self.coefficients[element_id]

    def eval_derivative(
        self, element_id: int, point, alpha: Sequence[int], check: bool = True
    ) -> float:
        """
        Exact partial derivative d^alpha of the element polynomial at a point.

        Raises:
            FieldError: If the point lies outside the element
        """
        point = np.asarray(point, dtype=float).reshape(1, -1)
        if check and not self.mesh.contains(element_id, point)[0]:
            raise FieldError(f"point {point[0].tolist()} outside element {element_id}")
        return float(self.evaluate(element_id, point, alpha)[0])

    def derivative_vector(self, element_id: int, point, indices=None) -> np.ndarray:
        """All derivatives d^alpha, |alpha| <= p, in graded-lex order."""
        indices = self.indices if indices is None else indices
        point = np.asarray(point, dtype=float).reshape(1, -1)
        return np.array([self.evaluate(element_id, point, a)[0] for a in indices])

    def interface_jump(self, interface: Interface, alpha: Sequence[int]) -> float:
        """Jump of d^alpha across an interface: right trace minus left trace."""
        point = interface.point[None, :]
        right = self.evaluate(interface.right, point, alpha)[0]
        left = self.evaluate(interface.left, point, alpha)[0]
        return float(right - left)

    def jump_vector(self, interface: Interface) -> np.ndarray:
        """Raw jumps J^(alpha) for all |alpha| <= p in graded-lex order."""
        return self.derivative_vector(interface.right, interface.point) - self.derivative_vector(
            interface.left, interface.point
        )

    def monomial_coefficients(self, element_id: int) -> np.ndarray:
        """Coefficients of the element polynomial in raw monomials x^alpha."""
        n = self.mesh.dimension
        center = self.mesh.centroids[element_id]
        scale = self.mesh.diameters[element_id]
        position = {alpha: i for i, alpha in enumerate(self.indices)}
        raw = np.zeros(len(self.indices))
        for coef, alpha in zip(self.coefficients[element_id], self.indices):
            if coef == 0.0:
                continue
            for gamma in itertools.product(*[range(a + 1) for a in alpha]):
                term = coef / scale ** sum(alpha)
                for d in range(n):
                    term *= math.comb(alpha[d], gamma[d]) * (-center[d]) ** (alpha[d] - gamma[d])
                raw[position[MultiIndex(gamma)]] += term
        return raw

    def to_dict(self, mesh_ref: Optional[str] = None) -> dict:
        return {
            "mesh": mesh_ref if mesh_ref is not None else json.loads(mesh_to_json(self.mesh)),
            "degree": self.degree,
            "coefficients": self.coefficients.tolist(),
        }


def save_field(
    field: PiecewisePolyField, path: Union[str, Path], mesh_ref: Optional[str] = None
) -> None:
    """Write a field file; the mesh is inlined unless a mesh path is given."""
    if mesh_ref is None:
        mesh_text = mesh_to_json(field.mesh).strip().replace("\n", "\n  ")
    else:
        mesh_text = json.dumps(mesh_ref)
    rows = ",\n    ".join(
        "[" + ", ".join(format(float(c), ".17g") for c in row) + "]"
        for row in field.coefficients
    )
    Path(path).write_text(
        "{\n"
        f'  "mesh": {mesh_text},\n'
        f'  "degree": {field.degree},\n'
        f'  "coefficients": [\n    {rows}\n  ]\n'
        "}\n"
    )


def load_field(path: Union[str, Path], mesh: Optional[Mesh] = None) -> PiecewisePolyField:
    """
    Read a field file. A string "mesh" entry is a path relative to the file.

    Raises:
        FieldError: Malformed file or coefficient shape mismatch
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise FieldError(f"malformed field file {path}: {e}") from e
    if not isinstance(data, dict) or "degree" not in data or "coefficients" not in data:
        raise FieldError(f"malformed field file {path}: need 'degree' and 'coefficients'")
    if mesh is None:
        ref = data.get("mesh")
        if isinstance(ref, str):
            mesh = load_mesh(path.parent / ref)
        elif isinstance(ref, dict):
            mesh = mesh_from_dict(ref)
        else:
            raise FieldError(f"field file {path} has no usable 'mesh' entry")
    return PiecewisePolyField(mesh, int(data["degree"]), data["coefficients"])
