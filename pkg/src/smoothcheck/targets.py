"""
Built-in target functions u with exact partial derivatives.

Targets are addressed by name plus keyword parameters, e.g.
``make_target("step", location=0.5, height=1.0)``.
"""

import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np


class TargetFunction:
    """
    Analytic function with a partial-derivative oracle.

    Args:
        name: Registry name
        params: Parameters the target was built with
        derivative: Callable (points, alpha) -> values at (npts, n) points
        breakpoints: Locations along x_1 where u or its derivatives jump;
            1D element quadrature is split there
        smooth: Whether u is infinitely differentiable
        exact_seminorms: Optional known values keyed by (order, s)
    """

    def __init__(
        self,
        name: str,
        params: dict,
        derivative: Callable[[np.ndarray, Tuple[int, ...]], np.ndarray],
        breakpoints: Sequence[float] = (),
        smooth: bool = True,
        exact_seminorms: Optional[Dict[tuple, float]] = None,
    ):
        self.name = name
        self.params = dict(params)
        self._derivative = derivative
        self.breakpoints = tuple(float(b) for b in breakpoints)
        self.smooth = smooth
        self.exact_seminorms = dict(exact_seminorms or {})

    def __repr__(self) -> str:
        return f"TargetFunction({self.name!r}, {self.params})"

    def value(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self._derivative(points, (0,) * points.shape[1])

    def derivative(self, points, alpha: Sequence[int]) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != points.shape[1]:
            raise ValueError(
                f"multi-index length {len(alpha)} does not match dimension {points.shape[1]}"
            )
        return self._derivative(points, alpha)

    def __call__(self, points) -> np.ndarray:
        return self.value(points)


def _sine_1d(x: np.ndarray, k: int, frequency: float, phase: float) -> np.ndarray:
    return frequency**k * np.sin(frequency * x + phase + k * math.pi / 2.0)


def sine(frequency: float = math.pi, phase: float = 0.0) -> TargetFunction:
    """u = sin(frequency * x_1 + phase); constant in the other coordinates."""

    def derivative(points, alpha):
        if any(alpha[1:]):
            return np.zeros(points.shape[0])
        return _sine_1d(points[:, 0], alpha[0], frequency, phase)

    return TargetFunction("sine", {"frequency": frequency, "phase": phase}, derivative)


def sin_pi_x() -> TargetFunction:
    target = sine(math.pi)
    target.name = "sin_pi_x"
    target.params = {}
    return target


def sin_pi_product(dimension: int) -> TargetFunction:
    """u = prod_d sin(pi x_d) over the first ``dimension`` coordinates."""

    def derivative(points, alpha):
        values = np.ones(points.shape[0])
        for d in range(points.shape[1]):
            if d < dimension:
                values = values * _sine_1d(points[:, d], alpha[d], math.pi, 0.0)
            elif alpha[d]:
                return np.zeros(points.shape[0])
        return values

    name = {2: "sin_pi_xy", 3: "sin_pi_xyz"}[dimension]
    return TargetFunction(name, {}, derivative)


def step(location: float = 0.5, height: float = 1.0) -> TargetFunction:
    """u = height for x_1 > location, 0 otherwise."""

    def derivative(points, alpha):
        if any(alpha):
            return np.zeros(points.shape[0])
        return np.where(points[:, 0] > location, height, 0.0)

    return TargetFunction(
        "step",
        {"location": location, "height": height},
        derivative,
        breakpoints=(location,),
        smooth=False,
    )


def abs_kink(location: float = 0.5) -> TargetFunction:
    """u = |x_1 - location|."""

    def derivative(points, alpha):
        shifted = points[:, 0] - location
        if any(alpha[1:]):
            return np.zeros(points.shape[0])
        if alpha[0] == 0:
            return np.abs(shifted)
        if alpha[0] == 1:
            return np.sign(shifted)
        return np.zeros(points.shape[0])

    return TargetFunction(
        "abs_kink", {"location": location}, derivative, breakpoints=(location,), smooth=False
    )


def poly(terms: Sequence[Sequence]) -> TargetFunction:
    """
    Polynomial sum of coef * x^exponents.

    Args:
        terms: List of [coef, [e_1, ..., e_n]] pairs

    Example:
        >>> u = poly([[1.0, [2]]])  # x^2
        >>> float(u.derivative([[0.5]], (1,))[0])
        1.0
    """
    parsed = [(float(c), tuple(int(e) for e in exps)) for c, exps in terms]

    def derivative(points, alpha):
        values = np.zeros(points.shape[0])
        for coef, exps in parsed:
            if len(exps) != points.shape[1]:
                raise ValueError(
                    f"term exponents {exps} do not match dimension {points.shape[1]}"
                )
            if any(a > e for a, e in zip(alpha, exps)):
                continue
            term = np.full(points.shape[0], coef)
            for d, (a, e) in enumerate(zip(alpha, exps)):
                term *= math.perm(e, a) * points[:, d] ** (e - a)
            values += term
        return values

    return TargetFunction("poly", {"terms": [[c, list(e)] for c, e in parsed]}, derivative)


TARGETS: Dict[str, Callable[..., TargetFunction]] = {
    "sine": sine,
    "sin_pi_x": sin_pi_x,
    "sin_pi_xy": lambda: sin_pi_product(2),
    "sin_pi_xyz": lambda: sin_pi_product(3),
    "step": step,
    "abs_kink": abs_kink,
    "poly": poly,
}


def make_target(name: str, **params) -> TargetFunction:
    """
    Build a registered target by name.

    Raises:
        ValueError: Unknown name or bad parameters
    """
    if name not in TARGETS:
        raise ValueError(f"Unknown target {name!r}; choose from {sorted(TARGETS)}")
    try:
        return TARGETS[name](**params)
    except TypeError as e:
        raise ValueError(f"bad parameters for target {name!r}: {e}") from e
