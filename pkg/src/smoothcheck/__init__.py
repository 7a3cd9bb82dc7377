"""smoothcheck - numerical smoothness indicators for piecewise polynomials."""

__version__ = "1.0.0"
