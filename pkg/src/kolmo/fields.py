"""Grids, fields, and trajectories shared by the solver, potentials, and probes.

Everything is cell centered: a Grid covers [xlo, xhi] x [ylo, yhi] with nx x ny
cells and carries the time stepping window; a Field is one time level; a
Trajectory stacks levels at uniformly spaced output times; a SpaceTimeField is
the same data viewed as samples on a 3-d space-time grid with trilinear
interpolation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Box",
    "Grid",
    "Field",
    "Trajectory",
    "SpaceTimeField",
    "AnisotropyAdvisory",
]


class AnisotropyAdvisory(UserWarning):
    """Grid advisory: dy does not scale like dx^3, group balls may be under-resolved in y."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned space-time box."""

    xlo: float
    xhi: float
    ylo: float
    yhi: float
    tlo: float
    thi: float

    def __post_init__(self):
        if not (self.xhi > self.xlo and self.yhi > self.ylo and self.thi > self.tlo):
            raise ValueError(f"degenerate box {self}")

    @property
    def x_span(self) -> float:
        return self.xhi - self.xlo

    @property
    def y_span(self) -> float:
        return self.yhi - self.ylo

    @property
    def t_span(self) -> float:
        return self.thi - self.tlo


def _centers(lo: float, hi: float, n: int) -> np.ndarray:
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h


@dataclass(frozen=True)
class Grid:
    """Spatial cell grid plus the time window it will be marched over."""

    xlo: float
    xhi: float
    ylo: float
    yhi: float
    nx: int
    ny: int
    dt: float
    t0: float
    t1: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need nx, ny >= 4, got {self.nx} x {self.ny}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t1 > self.t0:
            raise ValueError("need t1 > t0")
        if not (self.xhi > self.xlo and self.yhi > self.ylo):
            raise ValueError("degenerate spatial extent")
        if self.dy > 8.0 * self.dx**3:
            warnings.warn(
                f"dy={self.dy:.3g} > 8 dx^3={8 * self.dx**3:.3g}: group balls at "
                "grid scale are thinner in y than one cell",
                AnisotropyAdvisory,
                stacklevel=2,
            )

    @property
    def dx(self) -> float:
        return (self.xhi - self.xlo) / self.nx

    @property
    def dy(self) -> float:
        return (self.yhi - self.ylo) / self.ny

    @cached_property
    def xs(self) -> np.ndarray:
        return _centers(self.xlo, self.xhi, self.nx)

    @cached_property
    def ys(self) -> np.ndarray:
        return _centers(self.ylo, self.yhi, self.ny)

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    @property
    def box(self) -> Box:
        return Box(self.xlo, self.xhi, self.ylo, self.yhi, self.t0, self.t1)

    def refined(self, x_factor: int = 2, y_factor: Optional[int] = None) -> "Grid":
        """Spatial refinement; dt is refreshed by the caller via cfl_dt.

        y_factor defaults to x_factor; convergence studies that track the
        anisotropic geometry refine y faster (the advisory dy ~ dx^3 scaling).
        """
        if y_factor is None:
            y_factor = x_factor
        return Grid(
            self.xlo, self.xhi, self.ylo, self.yhi,
            self.nx * x_factor, self.ny * y_factor,
            self.dt / x_factor**2, self.t0, self.t1,
        )


@dataclass
class Field:
    """Scalar cell-centered samples at one time level, values shape (nx, ny)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"values shape {self.values.shape} != grid ({self.grid.nx}, {self.grid.ny})"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def sample(self, x, y) -> np.ndarray:
        """Bilinear interpolation at (x, y); queries are clamped to the grid hull."""
        return _interp_2d(self.grid.xs, self.grid.ys, self.values, x, y)


@dataclass
class Trajectory:
    """Solver output: fields at uniformly spaced times, values shape (nt, nx, ny)."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        nt = len(self.times)
        if self.values.shape != (nt, self.grid.nx, self.grid.ny):
            raise ValueError(f"trajectory shape mismatch: {self.values.shape}")

    @property
    def final(self) -> Field:
        return Field(self.grid, self.values[-1])

    def field_at(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def as_space_time(self) -> "SpaceTimeField":
        return SpaceTimeField(
            xs=self.grid.xs,
            ys=self.grid.ys,
            ts=self.times,
            values=np.moveaxis(self.values, 0, 2).copy(),
        )


@dataclass
class SpaceTimeField:
    """Samples u(x_i, y_j, t_k) with trilinear interpolation and cell sums.

    An optional boolean mask marks valid cells; masked-out cells are excluded
    from norms and integrals.
    """

    xs: np.ndarray
    ys: np.ndarray
    ts: np.ndarray
    values: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        self.ts = np.asarray(self.ts, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        expect = (len(self.xs), len(self.ys), len(self.ts))
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != {expect}")
        if self.mask is not None and self.mask.shape != expect:
            raise ValueError("mask shape mismatch")

    @classmethod
    def from_function(
        cls,
        fn: Callable,
        box: Box,
        shape: tuple[int, int, int],
    ) -> "SpaceTimeField":
        nx, ny, nt = shape
        xs = _centers(box.xlo, box.xhi, nx)
        ys = _centers(box.ylo, box.yhi, ny)
        ts = _centers(box.tlo, box.thi, nt)
        X, Y, T = np.meshgrid(xs, ys, ts, indexing="ij")
        return cls(xs, ys, ts, np.asarray(fn(X, Y, T), dtype=float))

    @property
    def spacings(self) -> tuple[float, float, float]:
        return (_spacing(self.xs), _spacing(self.ys), _spacing(self.ts))

    @property
    def cell_volume(self) -> float:
        dx, dy, dt = self.spacings
        return dx * dy * dt

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys, self.ts, indexing="ij")

    def valid(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.values.shape, dtype=bool)
        return self.mask

    def sample(self, x, y, t) -> np.ndarray:
        """Trilinear interpolation, clamped to the sample hull."""
        return _interp_3d(self.xs, self.ys, self.ts, self.values, x, y, t)

    def integrate(self, integrand: np.ndarray, where: Optional[np.ndarray] = None) -> float:
        sel = self.valid()
        if where is not None:
            sel = sel & where
        return float(np.sum(integrand[sel]) * self.cell_volume)


def _spacing(axis: np.ndarray) -> float:
    if len(axis) < 2:
        raise ValueError("axis needs at least 2 samples to define a spacing")
    return float(axis[1] - axis[0])


def _bracket(axis: np.ndarray, q: np.ndarray):
    """Clamped interval index and fractional offset for uniform axes."""
    h = _spacing(axis)
    s = (np.asarray(q, dtype=float) - axis[0]) / h
    i = np.clip(np.floor(s).astype(int), 0, len(axis) - 2)
    w = np.clip(s - i, 0.0, 1.0)
    return i, w


def _interp_2d(xs, ys, vals, x, y):
    i, wx = _bracket(xs, x)
    j, wy = _bracket(ys, y)
    v00 = vals[i, j]
    v10 = vals[i + 1, j]
    v01 = vals[i, j + 1]
    v11 = vals[i + 1, j + 1]
    return (
        v00 * (1 - wx) * (1 - wy)
        + v10 * wx * (1 - wy)
        + v01 * (1 - wx) * wy
        + v11 * wx * wy
    )


def _interp_3d(xs, ys, ts, vals, x, y, t):
    i, wx = _bracket(xs, x)
    j, wy = _bracket(ys, y)
    k, wt = _bracket(ts, t)
    out = 0.0
    for di, fx in ((0, 1 - wx), (1, wx)):
        for dj, fy in ((0, 1 - wy), (1, wy)):
            for dk, ft in ((0, 1 - wt), (1, wt)):
                out = out + vals[i + di, j + dj, k + dk] * fx * fy * ft
    return out
