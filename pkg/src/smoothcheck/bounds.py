"""
Numerical checks of the lower bounds tying approximation error to
numerical smoothness.

- ``local_lower_bound_check``: on the ball at an interface point, the best
  P_p fit to a piecewise field equals h_min^n h^(2p+2) Q(D-tilde), and any
  single polynomial (e.g. a covolume projection) does no better.
- ``global_lower_bound_report``: error versus the indicator-minus-seminorm
  bracket of the global bound.
- ``convergence_study``/``necessary_condition_verdict``: refinement studies
  and the implication "optimal error rate => bounded indicators".
- ``appendix_jump_bound_check``/``appendix_interior_bound_check``: 1D
  pointwise bounds on derivative jumps and differences.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg

from .dual import build_dual_covolume
from .errors import StudyError
from .mesh import KIND_DIMENSION, Interface, Mesh, build_structured_mesh, refine_uniform
from .norms import error_norm, norm_label, parse_norm, sobolev_seminorm
from .polynomial import PiecewisePolyField, load_field, monomial_matrix
from .projection import (
    DualField,
    dual_projection_error,
    l2_best_fit,
    lagrange_interpolant_1d,
    local_l2_project_dual,
)
from .qform import (
    QFormSpec,
    QuadraticForm,
    assemble_qform,
    cp_constant,
    eval_q,
    interface_frame_jumps,
)
from .quadrature import half_ball_rule
from .smoothness import (
    interior_vectors,
    jump_vectors,
    type_a_indicator,
    type_i_indicator,
)
from .targets import TargetFunction, make_target

logger = logging.getLogger(__name__)

METHODS = ("interpolant", "l2_fit", "files")
RATE_FLOOR = 1e-13
R_HAT_RTOL = 1e-9


# Local bound on one interface ball


@dataclass(frozen=True)
class LocalBoundResult:
    interface_id: int
    radius: float
    lhs: float
    min_residual: float
    q_value: float

    @property
    def identity_gap(self) -> float:
        return abs(self.min_residual - self.q_value)

    @property
    def ratio(self) -> Optional[float]:
        return self.lhs / self.q_value if self.q_value > 0 else None

    def identity_holds(self, rtol: float = 1e-9) -> bool:
        return self.identity_gap <= rtol * (1.0 + self.q_value)

    def inequality_holds(self, rtol: float = 1e-9) -> bool:
        return self.lhs >= self.min_residual - rtol * (1.0 + self.min_residual)


def _ball_sides(mesh: Mesh, interface: Interface, radius: float, degree: int):
    for side, element in ((-1, interface.left), (1, interface.right)):
        points, weights = half_ball_rule(
            mesh.dimension, radius, degree, interface.point, interface.normal, side
        )
        yield element, points, weights


def disk_within_elements(mesh: Mesh, interface: Interface, radius: float) -> bool:
    """Whether each half of the interface ball lies in its own element."""
    for element, points, _ in _ball_sides(mesh, interface, radius, 8):
        offsets = points - interface.point
        rim = interface.point + radius * offsets / np.linalg.norm(offsets, axis=1, keepdims=True)
        if not mesh.contains(element, np.vstack([points, rim])).all():
            return False
    return True


def _resolve_qform(mesh: Mesh, p: int, radius: float, qf: Optional[QuadraticForm]):
    r_hat = radius / mesh.h_min
    if qf is None:
        return assemble_qform(QFormSpec(mesh.dimension, p, r_hat))
    if qf.spec.n != mesh.dimension or qf.spec.p != p:
        raise StudyError(
            f"quadratic form is for n={qf.spec.n}, p={qf.spec.p}; "
            f"field has n={mesh.dimension}, p={p}"
        )
    if abs(qf.spec.r_hat - r_hat) > R_HAT_RTOL * r_hat:
        raise StudyError(
            f"r_hat mismatch: radius / h_min = {r_hat:.12g}, form has {qf.spec.r_hat:.12g}"
        )
    return qf


def local_lower_bound_check(
    field: PiecewisePolyField,
    dual_field: Optional[DualField],
    interface: Interface,
    radius: float,
    qf: Optional[QuadraticForm] = None,
) -> LocalBoundResult:
    """
    Compare the three sides of the local bound on the ball of ``radius``.

    lhs is ||u^I - u^R||^2 on the ball (0 without a dual field),
    min_residual the least-squares minimum over P_p, and q_value
    h_min^n h^(2p+2) Q(D-tilde) with D-tilde in the interface frame.

    Example:
        1D, p = 0, values -1/2 | 1/2, uniform h, radius h/4:
        min_residual = q_value = h / 8.

    Raises:
        StudyError: If radius / h_min differs from the form's r_hat, or the
            ball reaches past the two elements of the interface
    """
    mesh = field.mesh
    p = field.degree
    qf = _resolve_qform(mesh, p, radius, qf)
    if not disk_within_elements(mesh, interface, radius):
        raise StudyError(
            f"ball of radius {radius:.6g} at interface {interface.id} crosses another interface"
        )

    degree = 2 * p + 2
    points, weights, values = [], [], []
    for element, pts, w in _ball_sides(mesh, interface, radius, degree):
        points.append(pts)
        weights.append(w)
        values.append(field.evaluate(element, pts))
    points = np.vstack(points)
    weights = np.concatenate(weights)
    values = np.concatenate(values)

    design = monomial_matrix((points - interface.point) / radius, p)
    root_w = np.sqrt(weights)
    coef, *_ = linalg.lstsq(design * root_w[:, None], values * root_w)
    min_residual = float(np.dot(weights, (design @ coef - values) ** 2))

    lhs = 0.0
    if dual_field is not None:
        projected = dual_field.evaluate(interface.id, points)
        lhs = float(np.dot(weights, (projected - values) ** 2))

    orders = np.array([a.order for a in field.indices])
    tilde = field.jump_vector(interface) * mesh.h_min**orders / mesh.h ** (p + 1)
    framed = interface_frame_jumps(tilde, interface.normal, p)
    q_value = mesh.h_min**mesh.dimension * mesh.h ** (2 * p + 2) * eval_q(qf, framed)

    return LocalBoundResult(interface.id, radius, lhs, min_residual, q_value)


@dataclass
class LocalBoundSurvey:
    results: List[LocalBoundResult]
    skipped: List[int]

    @property
    def max_identity_gap(self) -> float:
        return max((r.identity_gap / (1.0 + r.q_value) for r in self.results), default=0.0)

    def all_hold(self, rtol: float = 1e-9) -> bool:
        return all(r.identity_holds(rtol) and r.inequality_holds(rtol) for r in self.results)


def local_lower_bound_survey(
    field: PiecewisePolyField,
    dual_field: Optional[DualField],
    radius: float,
    qf: Optional[QuadraticForm] = None,
    interfaces: Optional[Sequence[Interface]] = None,
) -> LocalBoundSurvey:
    """local_lower_bound_check on every interface whose ball fits; the rest are skipped."""
    mesh = field.mesh
    qf = _resolve_qform(mesh, field.degree, radius, qf)
    interfaces = mesh.interfaces if interfaces is None else interfaces
    results, skipped = [], []
    for iface in interfaces:
        if not disk_within_elements(mesh, iface, radius):
            skipped.append(iface.id)
            continue
        results.append(local_lower_bound_check(field, dual_field, iface, radius, qf))
    if skipped:
        logger.warning(
            "skipped %d of %d interfaces whose ball crosses another interface",
            len(skipped),
            len(interfaces),
        )
    return LocalBoundSurvey(results, skipped)


# Global bound


@dataclass(frozen=True)
class GlobalBoundReport:
    s: str
    scaling: str
    error: float
    indicator_term: float
    seminorm: float
    h: float
    p: int
    c_p: Optional[float] = None

    @property
    def bracket(self) -> float:
        return self.indicator_term - self.seminorm

    @property
    def ratio(self) -> Optional[float]:
        if self.bracket <= 0:
            return None
        return self.error / (self.h ** (self.p + 1) * self.bracket)

    @property
    def note(self) -> Optional[str]:
        return "bracket <= 0" if self.bracket <= 0 else None

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "scaling": self.scaling,
            "error": self.error,
            "indicator_term": self.indicator_term,
            "seminorm": self.seminorm,
            "bracket": self.bracket,
            "ratio": self.ratio,
            "note": self.note,
            "C_p": self.c_p,
        }


def global_lower_bound_report(
    u: Optional[TargetFunction],
    field: PiecewisePolyField,
    s,
    qf: Optional[QuadraticForm] = None,
    scaling: str = "D",
    seminorm: Optional[float] = None,
) -> GlobalBoundReport:
    """
    Error, indicator term and seminorm of the global lower bound.

    With ``scaling="D"`` the indicator term is (sum h^n ||D_i||^s)^(1/s)
    or max ||D_i||. With ``scaling="D_tilde"`` it is the non-quasi-uniform
    variant: (sum h_min^n ||D~_i||^2)^(1/2) for s=2, sum h_min^n ||D~_i||
    for s=1 and (h_min/h)^(n/2) max ||D~_i|| for s=inf.

    Raises:
        ValueError: Without a target function or for an unknown scaling
    """
    if u is None:
        raise ValueError("global lower bound needs a target function u for the seminorm")
    if scaling not in ("D", "D_tilde"):
        raise ValueError(f"scaling must be 'D' or 'D_tilde', got {scaling!r}")
    s = parse_norm(s)
    mesh = field.mesh
    p = field.degree
    jumps = jump_vectors(field)

    if scaling == "D":
        term = type_a_indicator(field, s=s, jumps=jumps)
        if s != math.inf:
            term = term ** (1.0 / s)
    else:
        norms = np.array([j.tilde_norm for j in jumps]) if jumps else np.zeros(0)
        n = mesh.dimension
        if s == math.inf:
            term = (mesh.h_min / mesh.h) ** (n / 2.0) * float(norms.max(initial=0.0))
        else:
            term = float(np.sum(mesh.h_min**n * norms**s)) ** (1.0 / s)

    if seminorm is None:
        seminorm = sobolev_seminorm(u, mesh, p + 1, s)
    return GlobalBoundReport(
        s=norm_label(s),
        scaling=scaling,
        error=error_norm(u, field, s),
        indicator_term=float(term),
        seminorm=float(seminorm),
        h=mesh.h,
        p=p,
        c_p=cp_constant(qf) if qf is not None else None,
    )


# Refinement studies


@dataclass
class StudyConfig:
    """
    A refinement study: target, mesh family, approximation method and the
    thresholds of the verdict.

    Raises:
        StudyError: On inconsistent settings
    """

    target: str
    p: int
    kind: str = "interval"
    method: str = "interpolant"
    levels: int = 5
    base_divisions: int = 4
    target_params: Dict = dataclass_field(default_factory=dict)
    norms: Sequence = (2,)
    domain: Optional[Sequence] = None
    field_files: Sequence[str] = ()
    corrupt_amplitude: float = 0.0
    sample_rule: str = "centroid"
    rate_floor: float = RATE_FLOOR
    rate_tolerance: float = 0.25
    bounded_ratio: float = 1.5
    threads: int = 1

    def __post_init__(self):
        if self.kind not in KIND_DIMENSION:
            raise StudyError(f"Unknown element kind: {self.kind}")
        if self.p < 0:
            raise StudyError(f"p must be >= 0, got {self.p}")
        if self.levels < 3:
            raise StudyError(f"levels must be >= 3 for rate fitting, got {self.levels}")
        if self.base_divisions < 1:
            raise StudyError(f"base_divisions must be >= 1, got {self.base_divisions}")
        if self.method not in METHODS:
            raise StudyError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "interpolant" and self.kind != "interval":
            raise StudyError("the Lagrange interpolant is only available on 1D meshes")
        if self.method == "files" and len(self.field_files) != self.levels:
            raise StudyError(
                f"method 'files' needs one field file per level: "
                f"{self.levels} levels, {len(self.field_files)} files"
            )
        if self.threads < 1:
            raise StudyError(f"threads must be >= 1, got {self.threads}")
        if self.bounded_ratio <= 1.0:
            raise StudyError(f"bounded_ratio must be > 1, got {self.bounded_ratio}")
        try:
            self.norms = tuple(parse_norm(s) for s in self.norms)
        except ValueError as e:
            raise StudyError(str(e)) from e
        if not self.norms:
            raise StudyError("at least one norm is required")
        self.target_params = dict(self.target_params)

    @property
    def dimension(self) -> int:
        return KIND_DIMENSION[self.kind]

    @property
    def box(self) -> np.ndarray:
        if self.domain is None:
            return np.tile([0.0, 1.0], (self.dimension, 1))
        return np.array(self.domain, dtype=float).reshape(self.dimension, 2)

    def indicator_norms(self) -> tuple:
        return tuple(dict.fromkeys(self.norms + (math.inf,)))

    def build_target(self) -> TargetFunction:
        """
        The target, with kinks and steps moved off the mesh skeleton.

        Without an explicit location they sit at mid + h_coarse / 3 along x_1,
        which no uniform refinement of the base mesh ever hits.
        """
        params = dict(self.target_params)
        if self.target in ("step", "abs_kink") and "location" not in params:
            low, high = self.box[0]
            params["location"] = 0.5 * (low + high) + (high - low) / self.base_divisions / 3.0
        try:
            return make_target(self.target, **params)
        except ValueError as e:
            raise StudyError(str(e)) from e

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "target_params": dict(self.target_params),
            "p": self.p,
            "kind": self.kind,
            "method": self.method,
            "levels": self.levels,
            "base_divisions": self.base_divisions,
            "norms": [norm_label(s) for s in self.norms],
            "corrupt_amplitude": self.corrupt_amplitude,
            "sample_rule": self.sample_rule,
            "rate_floor": self.rate_floor,
            "rate_tolerance": self.rate_tolerance,
            "bounded_ratio": self.bounded_ratio,
        }


@dataclass
class StudyLevel:
    level: int
    h: float
    h_min: float
    num_elements: int
    errors: Dict[str, float]
    type_a: Dict[str, float]
    type_i: Dict[str, float]
    jump_max: List[float]
    max_norm_d: float

    def values(self) -> Dict[str, float]:
        """Flat name -> value mapping, as in one CSV row."""
        row = {"h": self.h, "h_min": self.h_min}
        row.update({f"error_L{k}": v for k, v in self.errors.items()})
        row.update({f"type_a_{k}": v for k, v in self.type_a.items()})
        row.update({f"type_i_{k}": v for k, v in self.type_i.items()})
        row.update({f"jump_k{k}": v for k, v in enumerate(self.jump_max)})
        row["max_norm_D"] = self.max_norm_d
        return row


@dataclass(frozen=True)
class RateFit:
    """Fitted log-log slope; rate is None when too few levels are above the floor."""

    name: str
    rate: Optional[float]
    residual: Optional[float]
    levels_used: int
    vanishing: bool = False

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "residual": self.residual,
            "levels_used": self.levels_used,
            "vanishing": self.vanishing,
        }


def fit_rate(name: str, hs: Sequence[float], values: Sequence[float], floor: float = RATE_FLOOR):
    """
    Least-squares slope of log(value) against log(h) over the finest
    max(L - 1, 3) levels, skipping values below ``floor``.

    Example:
        >>> round(fit_rate("e", [0.5, 0.25, 0.125], [0.25, 0.0625, 0.015625]).rate, 12)
        2.0
    """
    hs = np.asarray(hs, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    count = min(len(hs), max(len(hs) - 1, 3))
    hs, values = hs[-count:], values[-count:]
    keep = values >= floor
    if not keep.any():
        return RateFit(name, None, None, 0, vanishing=True)
    if keep.sum() < 2:
        return RateFit(name, None, None, int(keep.sum()))
    x, y = np.log(hs[keep]), np.log(values[keep])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return RateFit(name, float(slope), residual, int(keep.sum()))


@dataclass
class StudyResult:
    config: StudyConfig
    levels: List[StudyLevel]
    rates: Dict[str, RateFit] = dataclass_field(default_factory=dict)

    def column(self, name: str) -> List[float]:
        return [level.values()[name] for level in self.levels]

    def header(self) -> List[str]:
        return ["level", "num_elements"] + list(self.levels[0].values())

    def rows(self) -> List[list]:
        return [
            [level.level, level.num_elements] + list(level.values().values())
            for level in self.levels
        ]


def corrupt_field(
    field: PiecewisePolyField, amplitude: float, element_id: Optional[int] = None
) -> PiecewisePolyField:
    """Add a constant to one element (default the middle one), creating O(1) value jumps."""
    element_id = len(field.mesh) // 2 if element_id is None else element_id
    coefficients = np.array(field.coefficients)
    coefficients[element_id, 0] += amplitude
    return PiecewisePolyField(field.mesh, field.degree, coefficients)


def _approximate(cfg: StudyConfig, u: TargetFunction, mesh: Mesh) -> PiecewisePolyField:
    if cfg.method == "interpolant":
        return lagrange_interpolant_1d(u, mesh, cfg.p)
    return l2_best_fit(u, mesh, cfg.p)


def _evaluate_level(
    cfg: StudyConfig, u: TargetFunction, level: int, field: PiecewisePolyField
) -> StudyLevel:
    mesh = field.mesh
    if cfg.corrupt_amplitude:
        field = corrupt_field(field, cfg.corrupt_amplitude)
    jumps = jump_vectors(field)
    interior = interior_vectors(field, u, cfg.sample_rule)
    orders = np.array([a.order for a in field.indices])
    raw = np.array([np.abs(j.raw) for j in jumps]).reshape(-1, len(orders))
    jump_max = [
        float(raw[:, orders == k].max()) if raw.size else 0.0 for k in range(field.degree + 1)
    ]
    norms = cfg.indicator_norms()
    result = StudyLevel(
        level=level,
        h=mesh.h,
        h_min=mesh.h_min,
        num_elements=len(mesh),
        errors={norm_label(s): error_norm(u, field, s) for s in cfg.norms},
        type_a={norm_label(s): type_a_indicator(field, s=s, jumps=jumps) for s in norms},
        type_i={
            norm_label(s): type_i_indicator(field, u, s=s, interior=interior) for s in norms
        },
        jump_max=jump_max,
        max_norm_d=max((j.norm for j in jumps), default=0.0),
    )
    logger.info("level %d: h=%.4g, %d elements", level, mesh.h, len(mesh))
    return result


def _fields_for_study(cfg: StudyConfig, u: TargetFunction) -> List[PiecewisePolyField]:
    if cfg.method == "files":
        fields = [load_field(path) for path in cfg.field_files]
        for path, fld in zip(cfg.field_files, fields):
            if fld.degree != cfg.p or fld.mesh.kind != cfg.kind:
                raise StudyError(
                    f"field file {path} has p={fld.degree}, kind {fld.mesh.kind}; "
                    f"study expects p={cfg.p}, kind {cfg.kind}"
                )
        return fields
    meshes = [build_structured_mesh(cfg.box, cfg.dimension, cfg.base_divisions, cfg.kind)]
    for _ in range(cfg.levels - 1):
        meshes.append(refine_uniform(meshes[-1]))
    return _map_levels(lambda mesh: _approximate(cfg, u, mesh), meshes, cfg.threads)


def _map_levels(func, items, threads: int):
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def study_rates(result: StudyResult) -> Dict[str, RateFit]:
    """Rates of every tabulated quantity except h and h_min."""
    cfg = result.config
    hs = result.column("h")
    names = [n for n in result.levels[0].values() if n not in ("h", "h_min")]
    return {name: fit_rate(name, hs, result.column(name), cfg.rate_floor) for name in names}


@dataclass(frozen=True)
class JumpOrderRate:
    """Fitted decay of max_i |J_i^(k)| against the expected order p + 1 - k."""

    k: int
    expected: int
    rate: Optional[float]
    status: str

    def to_dict(self) -> dict:
        return {"k": self.k, "expected": self.expected, "rate": self.rate, "status": self.status}


def jump_order_rates(
    result: StudyResult, tolerance: Optional[float] = None
) -> List[JumpOrderRate]:
    """
    Classify each per-order jump rate.

    The expected order is a lower bound on the decay, so "faster" is
    consistent with optimal convergence; only "slower" contradicts it.

    Returns:
        One JumpOrderRate per k with status "optimal", "faster", "slower",
        "vanishing" (below the rate floor at every level) or "unfitted"
    """
    cfg = result.config
    tolerance = cfg.rate_tolerance if tolerance is None else tolerance
    rates = result.rates or study_rates(result)
    orders = []
    for k in range(len(result.levels[0].jump_max)):
        fit = rates[f"jump_k{k}"]
        expected = cfg.p + 1 - k
        if fit.vanishing:
            status = "vanishing"
        elif fit.rate is None:
            status = "unfitted"
        elif fit.rate < expected - tolerance:
            status = "slower"
        elif fit.rate > expected + tolerance:
            status = "faster"
        else:
            status = "optimal"
        orders.append(JumpOrderRate(k, expected, fit.rate, status))
    return orders


def convergence_study(cfg: StudyConfig) -> StudyResult:
    """
    Build the mesh family, approximate the target on every level and
    tabulate errors, indicators and per-order jump maxima with fitted rates.
    """
    u = cfg.build_target()
    fields = _fields_for_study(cfg, u)
    levels = _map_levels(
        lambda item: _evaluate_level(cfg, u, item[0], item[1]),
        list(enumerate(fields)),
        cfg.threads,
    )
    result = StudyResult(cfg, levels)
    result.rates = study_rates(result)
    return result


def study_result_from_table(cfg: StudyConfig, header: Sequence[str], rows) -> StudyResult:
    """Rebuild a StudyResult from the table written by a previous study."""
    levels = []
    for row in rows:
        data = dict(zip(header, row))

        def pick(prefix):
            return {k[len(prefix):]: float(v) for k, v in data.items() if k.startswith(prefix)}

        jumps = pick("jump_k")
        levels.append(
            StudyLevel(
                level=int(data["level"]),
                h=float(data["h"]),
                h_min=float(data["h_min"]),
                num_elements=int(data["num_elements"]),
                errors=pick("error_L"),
                type_a=pick("type_a_"),
                type_i=pick("type_i_"),
                jump_max=[jumps[k] for k in sorted(jumps, key=int)],
                max_norm_d=float(data["max_norm_D"]),
            )
        )
    result = StudyResult(cfg, levels)
    result.rates = study_rates(result)
    return result


@dataclass
class Verdict:
    status: str
    checks: Dict[str, object]

    def to_dict(self) -> dict:
        return {"verdict": self.status, **self.checks}


def _bounded(values: Sequence[float], ratio: float, floor: float) -> bool:
    last = np.abs(np.asarray(values[-3:], dtype=float)) + floor
    return bool(np.all(last[1:] / last[:-1] <= ratio))


def necessary_condition_verdict(result: StudyResult) -> Verdict:
    """
    Evaluate "optimal error rate => bounded indicators" and the remark
    direction "indicator growing like 1/h or faster => suboptimal error rate".

    PASS when neither implication is violated, FAIL when one is, and
    INCONCLUSIVE when the error rate cannot be fitted.

    Raises:
        StudyError: With fewer than 3 levels
    """
    if len(result.levels) < 3:
        raise StudyError(f"need >= 3 levels for a verdict, got {len(result.levels)}")
    cfg = result.config
    p, tol = cfg.p, cfg.rate_tolerance
    rates = result.rates or study_rates(result)
    label = norm_label(cfg.norms[0])
    error_fit = rates[f"error_L{label}"]

    indicator_names = [f"type_a_{norm_label(s)}" for s in cfg.indicator_norms()]
    indicator_names += [f"type_i_{norm_label(s)}" for s in cfg.indicator_norms()]
    bounded = {
        name: _bounded(result.column(name), cfg.bounded_ratio, cfg.rate_floor)
        for name in indicator_names
    }

    blowup_names = ["max_norm_D", "type_i_inf"]
    blowup = {
        name: rates[name].rate is not None and rates[name].rate <= -1.0 + tol
        for name in blowup_names
    }
    checks = {
        "norm": label,
        "error_rate": error_fit.rate,
        "optimal_rate": p + 1,
        "bounded": bounded,
        "blowup": blowup,
        "rates": {name: fit.to_dict() for name, fit in rates.items()},
        "jump_orders": [order.to_dict() for order in jump_order_rates(result)],
    }

    if error_fit.rate is None and not error_fit.vanishing:
        checks.update(antecedent=None, consequent=all(bounded.values()), remark_fired=None)
        return Verdict("INCONCLUSIVE", checks)

    optimal = error_fit.vanishing or error_fit.rate >= p + 1 - tol
    consequent = all(bounded.values())
    remark_fired = any(blowup.values())
    checks.update(
        antecedent=optimal,
        consequent=consequent,
        remark_fired=remark_fired,
        remark_holds=(not remark_fired) or not optimal,
    )
    if optimal and not consequent:
        return Verdict("FAIL", checks)
    if remark_fired and optimal:
        return Verdict("FAIL", checks)
    return Verdict("PASS", checks)


# Appendix bounds (1D)


@dataclass(frozen=True)
class AppendixBoundResult:
    k: int
    h: float
    observed: float
    bound: float

    @property
    def ratio(self) -> float:
        """observed / bound, with 0/0 taken as 0."""
        if self.bound <= RATE_FLOOR and self.observed <= RATE_FLOOR:
            return 0.0
        return self.observed / self.bound


def _appendix_bound(u: TargetFunction, field: PiecewisePolyField, k: int) -> float:
    mesh = field.mesh
    if mesh.dimension != 1:
        raise StudyError(f"appendix bounds are one-dimensional, got dimension {mesh.dimension}")
    if not 0 <= k <= field.degree:
        raise StudyError(f"k must be in [0, {field.degree}], got {k}")
    seminorm = sobolev_seminorm(u, mesh, field.degree + 1, math.inf)
    sup_error = error_norm(u, field, math.inf)
    return mesh.h ** (-k) * (mesh.h ** (field.degree + 1) * seminorm + sup_error)


def appendix_jump_bound_check(
    u: TargetFunction, field: PiecewisePolyField, k: int
) -> AppendixBoundResult:
    """
    max_i |J_i^(k)| against h^-k (h^(p+1) |u|_{W^(p+1)_inf} + ||u_R - u||_inf), C = 1.

    Raises:
        StudyError: If the mesh is not 1D or k is out of range
    """
    bound = _appendix_bound(u, field, k)
    jumps = [abs(field.interface_jump(iface, (k,))) for iface in field.mesh.interfaces]
    return AppendixBoundResult(k, field.mesh.h, max(jumps, default=0.0), bound)


def appendix_interior_bound_check(
    u: TargetFunction, field: PiecewisePolyField, k: int, sample_rule: str = "centroid"
) -> AppendixBoundResult:
    """Interior analogue: max_i |d^k (u - u_R)(x_i)| against the same bound."""
    bound = _appendix_bound(u, field, k)
    interior = interior_vectors(field, u, sample_rule)
    position = [a.order for a in field.indices].index(k)
    observed = max((abs(v.raw[position]) for v in interior), default=0.0)
    return AppendixBoundResult(k, field.mesh.h, float(observed), bound)


def ratio_band(values: Sequence[float], floor: float = RATE_FLOOR) -> float:
    """max / min over the values above floor (1 when fewer than two remain)."""
    kept = [v for v in values if v > floor]
    if len(kept) < 2:
        return 1.0
    return max(kept) / min(kept)


# Covolume projection order


@dataclass
class ProjectionStudy:
    hs: List[float]
    errors: List[float]
    rate: RateFit


def projection_order_study(
    target: TargetFunction,
    kind: str,
    p: int,
    levels: int = 4,
    base_divisions: int = 4,
    domain=None,
) -> ProjectionStudy:
    """||u - u^I||_L2 over the interior covolumes on a uniformly refined family."""
    if levels < 3:
        raise StudyError(f"levels must be >= 3 for rate fitting, got {levels}")
    n = KIND_DIMENSION[kind]
    box = np.tile([0.0, 1.0], (n, 1)) if domain is None else domain
    mesh = build_structured_mesh(box, n, base_divisions, kind)
    hs, errors = [], []
    for level in range(levels):
        if level:
            mesh = refine_uniform(mesh)
        projected = local_l2_project_dual(target, build_dual_covolume(mesh), p)
        hs.append(mesh.h)
        errors.append(dual_projection_error(target, projected))
    return ProjectionStudy(hs, errors, fit_rate("projection_L2", hs, errors))
