"""
Numerical-smoothness quantities of piecewise polynomial fields.

Type A looks across interfaces: the scaled derivative jumps
D^alpha = J^alpha / h^(p+1-|alpha|) at each interior interface point.
Type I looks inside elements: the scaled differences
F^alpha = d^alpha(u - u_h)(x_i) / h^(p+1-|alpha|) at one point per element.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import FieldError
from .mesh import Interface, Mesh
from .norms import norm_label, parse_norm
from .polynomial import PiecewisePolyField
from .quadrature import element_rule
from .targets import TargetFunction

logger = logging.getLogger(__name__)

SCALINGS = ("D", "D_tilde")
SAMPLE_RULES = ("centroid", "vertex-average", "points")
THRESHOLD_FLOOR = 1e-12


def _map_ordered(func, items, threads: int):
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


@dataclass(frozen=True, eq=False)
class JumpVector:
    """
    Raw and scaled derivative jumps at one interface.

    ``scaled`` holds D, ``tilde`` holds D-tilde; ``scaling`` records which one
    ``selected`` returns.
    """

    interface_id: int
    point: np.ndarray
    orders: np.ndarray
    raw: np.ndarray
    scaled: np.ndarray
    tilde: np.ndarray
    scaling: str = "D"

    @property
    def selected(self) -> np.ndarray:
        return self.scaled if self.scaling == "D" else self.tilde

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.scaled))

    @property
    def tilde_norm(self) -> float:
        return float(np.linalg.norm(self.tilde))

    @property
    def max_component(self) -> float:
        return float(np.abs(self.scaled).max())

    def order_norms(self) -> List[float]:
        """Euclidean norm of D restricted to each derivative order k = 0..p."""
        return [
            float(np.linalg.norm(self.scaled[self.orders == k]))
            for k in range(int(self.orders.max()) + 1)
        ]


def scaled_jump_vector(
    field: PiecewisePolyField, interface: Interface, scaling: str = "D"
) -> JumpVector:
    """
    Jumps of all derivatives of order <= p at the interface point.

    Example:
        1D, p = 0, values 0 | 1, h = h_min = 0.5: D^0 = 1 / 0.5 = 2.
    """
    if scaling not in SCALINGS:
        raise ValueError(f"scaling must be one of {SCALINGS}, got {scaling!r}")
    mesh = field.mesh
    p = field.degree
    orders = np.array([a.order for a in field.indices])
    raw = field.jump_vector(interface)
    scaled = raw / mesh.h ** (p + 1 - orders)
    tilde = raw * mesh.h_min**orders / mesh.h ** (p + 1)
    return JumpVector(interface.id, interface.point, orders, raw, scaled, tilde, scaling)


def jump_vectors(field: PiecewisePolyField, threads: int = 1) -> List[JumpVector]:
    return _map_ordered(
        lambda iface: scaled_jump_vector(field, iface), field.mesh.interfaces, threads
    )


def _aggregate(mesh: Mesh, norms: Sequence[float], s: float) -> float:
    if not len(norms):
        return 0.0
    norms = np.asarray(norms, dtype=float)
    if s == math.inf:
        return float(norms.max())
    return float(mesh.h**mesh.dimension * np.sum(norms**s))


def type_a_indicator(
    field: PiecewisePolyField,
    mesh: Optional[Mesh] = None,
    s=2,
    jumps: Optional[List[JumpVector]] = None,
) -> float:
    """
    sum_i h^n ||D_i||^s for finite s, max_i ||D_i|| for s = inf.

    Raises:
        ValueError: Unsupported s, or a mesh other than the field's
    """
    s = parse_norm(s)
    if mesh is not None and mesh is not field.mesh:
        raise ValueError("field is defined on a different mesh")
    jumps = jump_vectors(field) if jumps is None else jumps
    return _aggregate(field.mesh, [j.norm for j in jumps], s)


@dataclass(frozen=True, eq=False)
class InteriorVector:
    """Scaled differences F (None without a target) and magnitudes M."""

    element_id: int
    point: np.ndarray
    magnitudes: np.ndarray
    raw: Optional[np.ndarray] = None
    scaled: Optional[np.ndarray] = None

    @property
    def norm(self) -> Optional[float]:
        return None if self.scaled is None else float(np.linalg.norm(self.scaled))


def interior_vector(
    field: PiecewisePolyField,
    u: Optional[TargetFunction],
    element_id: int,
    point=None,
) -> InteriorVector:
    """
    F and M at one point of an element (default its centroid).

    Example:
        u = sin(pi x), field = 0, p = 1, h = 0.25, x_i = 0.5: F^0 = 1 / h^2 = 16.

    Raises:
        FieldError: If the point lies outside the element
    """
    mesh = field.mesh
    point = mesh.centroids[element_id] if point is None else np.asarray(point, dtype=float)
    point = point.reshape(1, -1)
    if not mesh.contains(element_id, point)[0]:
        raise FieldError(f"point {point[0].tolist()} outside element {element_id}")
    values = field.derivative_vector(element_id, point)
    magnitudes = np.abs(values)
    if u is None:
        return InteriorVector(element_id, point[0], magnitudes)
    orders = np.array([a.order for a in field.indices])
    exact = np.array([u.derivative(point, a)[0] for a in field.indices])
    raw = exact - values
    scaled = raw / mesh.h ** (field.degree + 1 - orders)
    return InteriorVector(element_id, point[0], magnitudes, raw, scaled)


def sample_points(mesh: Mesh, rule: str = "centroid", points=None) -> np.ndarray:
    """
    One sample point per element.

    ``centroid`` is the center of mass, ``vertex-average`` the mean of the
    vertices (the two agree on simplices), ``points`` takes user points.
    """
    if rule not in SAMPLE_RULES:
        raise ValueError(f"sample rule must be one of {SAMPLE_RULES}, got {rule!r}")
    if rule == "vertex-average":
        return np.array(mesh.centroids)
    if rule == "points":
        if points is None:
            raise ValueError("sample rule 'points' needs one point per element")
        points = np.asarray(points, dtype=float).reshape(-1, mesh.dimension)
        if points.shape[0] != len(mesh):
            raise ValueError(
                f"need {len(mesh)} sample points, one per element, got {points.shape[0]}"
            )
        return points
    if mesh.kind in ("interval", "triangle", "tetrahedron"):
        return np.array(mesh.centroids)
    centers = np.zeros((len(mesh), mesh.dimension))
    for e in range(len(mesh)):
        pts, w = element_rule(mesh.kind, mesh.element_vertices(e), 2)
        centers[e] = w @ pts / w.sum()
    return centers


def interior_vectors(
    field: PiecewisePolyField,
    u: Optional[TargetFunction],
    sample_rule: str = "centroid",
    points=None,
    threads: int = 1,
) -> List[InteriorVector]:
    samples = sample_points(field.mesh, sample_rule, points)
    return _map_ordered(
        lambda e: interior_vector(field, u, e, samples[e]), range(len(field.mesh)), threads
    )


def type_i_indicator(
    field: PiecewisePolyField,
    u: Optional[TargetFunction],
    mesh: Optional[Mesh] = None,
    s=2,
    sample_rule: str = "centroid",
    points=None,
    interior: Optional[List[InteriorVector]] = None,
) -> float:
    """
    sum_i h^n ||F_i||^s for finite s, max_i ||F_i|| for s = inf.

    Raises:
        ValueError: Without a target function, or for an unsupported s
    """
    s = parse_norm(s)
    if u is None:
        raise ValueError("type I indicator needs a target function u")
    if mesh is not None and mesh is not field.mesh:
        raise ValueError("field is defined on a different mesh")
    if interior is None:
        interior = interior_vectors(field, u, sample_rule, points)
    return _aggregate(field.mesh, [v.norm for v in interior], s)


@dataclass
class Thresholds:
    """
    Flagging policy.

    An interface is flagged when ||D_i|| exceeds ``jump_threshold`` if set,
    else ``median_factor`` times the median over interfaces (never below
    THRESHOLD_FLOOR). Elements are flagged when some M^alpha exceeds
    ``magnitude_threshold``.
    """

    median_factor: float = 10.0
    jump_threshold: Optional[float] = None
    magnitude_threshold: Optional[float] = None

    def __post_init__(self):
        if self.median_factor <= 0:
            raise ValueError(f"median_factor must be > 0, got {self.median_factor}")
        for name in ("jump_threshold", "magnitude_threshold"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    def jump_limit(self, norms: Sequence[float]) -> float:
        if self.jump_threshold is not None:
            return self.jump_threshold
        if not len(norms):
            return THRESHOLD_FLOOR
        return max(self.median_factor * float(np.median(norms)), THRESHOLD_FLOOR)


@dataclass(eq=False)
class SmoothnessReport:
    p: int
    n: int
    h: float
    h_min: float
    jumps: List[JumpVector]
    type_a: Dict[str, float]
    interior: List[InteriorVector]
    type_i: Optional[Dict[str, float]]
    max_magnitudes: List[float]
    thresholds: Thresholds
    sample_rule: str
    jump_limit: float
    flagged_interfaces: List[int]
    flagged_elements: List[int]

    @property
    def verdict(self) -> str:
        return "flagged" if self.flagged_interfaces or self.flagged_elements else "smooth"

    @property
    def worst_interface(self) -> Optional[int]:
        if not self.jumps:
            return None
        return max(self.jumps, key=lambda j: (j.norm, -j.interface_id)).interface_id

    def to_dict(self) -> dict:
        return {
            "summary": {
                "p": self.p,
                "n": self.n,
                "h": self.h,
                "h_min": self.h_min,
                "type_a": dict(self.type_a),
                "type_i": None if self.type_i is None else dict(self.type_i),
                "max_magnitudes": list(self.max_magnitudes),
                "sample_rule": self.sample_rule,
                "median_factor": self.thresholds.median_factor,
                "jump_threshold": self.thresholds.jump_threshold,
                "magnitude_threshold": self.thresholds.magnitude_threshold,
                "jump_limit": self.jump_limit,
                "verdict": self.verdict,
                "worst_interface": self.worst_interface,
                "flagged_interfaces": list(self.flagged_interfaces),
                "flagged_elements": list(self.flagged_elements),
            },
            "interfaces": [
                {
                    "id": j.interface_id,
                    "point": j.point.tolist(),
                    "J": j.raw.tolist(),
                    "D": j.scaled.tolist(),
                    "D_tilde": j.tilde.tolist(),
                    "norm": j.norm,
                    "order_norms": j.order_norms(),
                }
                for j in self.jumps
            ],
            "elements": [
                {
                    "id": v.element_id,
                    "point": v.point.tolist(),
                    "M": v.magnitudes.tolist(),
                    "F": None if v.scaled is None else v.scaled.tolist(),
                }
                for v in self.interior
            ],
        }

    def csv_header(self) -> List[str]:
        return ["id"] + [f"x{d + 1}" for d in range(self.n)] + ["norm_D", "max_abs_D", "flag"]

    def csv_rows(self) -> List[list]:
        flagged = set(self.flagged_interfaces)
        return [
            [
                j.interface_id,
                *j.point.tolist(),
                j.norm,
                j.max_component,
                int(j.interface_id in flagged),
            ]
            for j in self.jumps
        ]


def smoothness_report(
    field: PiecewisePolyField,
    mesh: Optional[Mesh] = None,
    u: Optional[TargetFunction] = None,
    thresholds: Optional[Thresholds] = None,
    sample_rule: str = "centroid",
    points=None,
    threads: int = 1,
) -> SmoothnessReport:
    """
    Per-interface and per-element detail plus Type A / Type I indicators for
    s = 1, 2, inf and the flags of the given thresholds.
    """
    if mesh is not None and mesh is not field.mesh:
        raise ValueError("field is defined on a different mesh")
    mesh = field.mesh
    thresholds = Thresholds() if thresholds is None else thresholds

    jumps = jump_vectors(field, threads)
    interior = interior_vectors(field, u, sample_rule, points, threads)

    norms_list = (1.0, 2.0, math.inf)
    type_a = {norm_label(s): _aggregate(mesh, [j.norm for j in jumps], s) for s in norms_list}
    type_i = None
    if u is not None:
        type_i = {
            norm_label(s): _aggregate(mesh, [v.norm for v in interior], s) for s in norms_list
        }

    magnitudes = np.array([v.magnitudes for v in interior])
    max_magnitudes = magnitudes.max(axis=0).tolist() if magnitudes.size else []

    norms = [j.norm for j in jumps]
    limit = thresholds.jump_limit(norms)
    flagged_interfaces = [j.interface_id for j in jumps if j.norm > limit]
    flagged_elements = []
    if thresholds.magnitude_threshold is not None:
        flagged_elements = [
            v.element_id for v in interior if v.magnitudes.max() > thresholds.magnitude_threshold
        ]
    if flagged_interfaces:
        logger.info(
            "%d of %d interfaces exceed ||D|| > %.3e", len(flagged_interfaces), len(jumps), limit
        )

    return SmoothnessReport(
        p=field.degree,
        n=mesh.dimension,
        h=mesh.h,
        h_min=mesh.h_min,
        jumps=jumps,
        type_a=type_a,
        interior=interior,
        type_i=type_i,
        max_magnitudes=max_magnitudes,
        thresholds=thresholds,
        sample_rule=sample_rule,
        jump_limit=limit,
        flagged_interfaces=flagged_interfaces,
        flagged_elements=flagged_elements,
    )
