"""Numerical toolkit for degenerate Kolmogorov-type diffusion equations."""

__version__ = "0.1.0"

from .group import BallSpec, CubeSpec, ORIGIN, Point  # noqa: F401
