"""
Exception hierarchy for smoothcheck.

Every error raised on purpose by the library derives from SmoothcheckError so
the entry point can map it to an exit code.
"""


class SmoothcheckError(Exception):
    """Base class for all smoothcheck errors."""


class ConfigError(SmoothcheckError):
    """Configuration file could not be parsed."""


class MeshError(SmoothcheckError, ValueError):
    """Malformed, non-conforming or degenerate mesh input."""


class RadiusFormulaError(MeshError):
    """Closed-form safe radius is not applicable to the mesh."""


class FieldError(SmoothcheckError, ValueError):
    """Piecewise field is inconsistent with its mesh or a query point."""


class NumericError(SmoothcheckError, ArithmeticError):
    """A numerical step produced an invalid result."""


class StudyError(SmoothcheckError, ValueError):
    """Invalid refinement study configuration or result."""
