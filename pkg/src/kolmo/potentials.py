"""Potential operators G_f(z) = integral of G(zeta^{-1} o z) f(zeta) d zeta.

The two kernels of interest are the heat kernel itself (dilation degree -4,
so alpha = 2 in the bookkeeping degree = alpha - 6) and the pole-derivative
kernel behind the drift potential (degree -5, alpha = 1).  Convolution
against an L^p field gains integrability, 1/q = 1/p - alpha/6; `gain_ratio`
measures the empirical operator norm on concrete fields.

The convolution is a Riemann sum over the nonzero input cells at every output
cell, skipping the input cell that contains the output point (an O(cell
measure) bias since the kernels are locally integrable).  The inner loop is
compiled with numba and parallelized over output cells with a fixed summation
order, so results are bit-identical regardless of thread count; the
KOLMO_THREADS environment variable caps the pool.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numba
import numpy as np
from numba import njit, prange

from .fields import SpaceTimeField
from .group import BallSpec, Point, compose, dilate, inverse
from .kernel import GAMMA_ALPHA, GAMMA_DX_ALPHA, gamma_dx, gamma_origin

__all__ = [
    "HomogeneousKernel",
    "gamma_kernel",
    "gamma_dx_kernel",
    "convolve",
    "lp_norm",
    "gain_ratio",
    "paired_exponent",
    "bump_field",
    "seeded_bump_family",
]

_LOG_PREFACTOR = math.log(math.sqrt(3.0) / (2.0 * math.pi))

# numba dispatch codes
_K_GAMMA = 0
_K_GAMMA_DX = 1


@dataclass(frozen=True)
class HomogeneousKernel:
    """A dilation-homogeneous kernel G with G(delta_mu z) = mu^(alpha-6) G(z)."""

    evaluator: Callable[[Point], Union[float, np.ndarray]]
    degree_alpha: float
    name: str = ""
    _code: int = _K_GAMMA

    def homogeneity_defect(self, z: Point, mu: float) -> float:
        """Relative defect of the scaling law at one sample; 0 for exact kernels."""
        lhs = self.evaluator(dilate(mu, z))
        rhs = mu ** (self.degree_alpha - 6.0) * self.evaluator(z)
        denom = max(abs(rhs), 1e-300)
        return abs(lhs - rhs) / denom


def gamma_kernel() -> HomogeneousKernel:
    """Heat-kernel potential: G_f = integral Gamma(z, zeta) f(zeta)."""
    return HomogeneousKernel(
        evaluator=lambda w: gamma_origin(w),
        degree_alpha=GAMMA_ALPHA,
        name="gamma",
        _code=_K_GAMMA,
    )


def gamma_dx_kernel() -> HomogeneousKernel:
    """Drift potential: G_f = -integral d_xi Gamma(z, zeta) f(zeta).

    The pole derivative transported to the origin is
    d_xi Gamma(z, zeta) = -[w_x/w_t + 3 w_y/w_t^2] Gamma(w) at w = zeta^{-1} o z,
    so the kernel carried here is its negative.
    """
    origin = Point(0.0, 0.0, 0.0)
    return HomogeneousKernel(
        evaluator=lambda w: -gamma_dx(w, origin),
        degree_alpha=GAMMA_DX_ALPHA,
        name="gamma-dx",
        _code=_K_GAMMA_DX,
    )


@njit(inline="always")
def _gamma_scalar(wx, wy, wt):
    if wt <= 0.0:
        return 0.0
    s = 1.0 / wt
    quad = s * (wx * wx + s * (3.0 * wx * wy + s * (3.0 * wy * wy)))
    lg = _LOG_PREFACTOR - 2.0 * math.log(wt) - quad
    if lg < -745.0:
        return 0.0
    return math.exp(lg)


@njit(inline="always")
def _kernel_scalar(code, wx, wy, wt):
    g = _gamma_scalar(wx, wy, wt)
    if code == _K_GAMMA:
        return g
    # negative pole derivative
    if wt <= 0.0 or g == 0.0:
        return 0.0
    s = 1.0 / wt
    return (s * wx + 3.0 * s * s * wy) * g


@njit(parallel=True, cache=True)
def _convolve_loop(
    out_x, out_y, out_t,            # flat output coordinates
    out_cell,                        # flat input-grid cell id of each output point (-1 if outside)
    src_x, src_y, src_t, src_f,      # support cell coordinates and values
    src_cell,                        # input-grid cell id of each support cell
    code, volume,
):
    n_out = out_x.shape[0]
    n_src = src_x.shape[0]
    out = np.empty(n_out)
    for i in prange(n_out):
        zx = out_x[i]
        zy = out_y[i]
        zt = out_t[i]
        skip = out_cell[i]
        acc = 0.0
        for j in range(n_src):
            if src_cell[j] == skip:
                continue
            wt = zt - src_t[j]
            if wt <= 0.0:
                continue
            wx = zx - src_x[j]
            wy = zy - src_y[j] + wt * src_x[j]
            acc += _kernel_scalar(code, wx, wy, wt) * src_f[j]
        out[i] = acc * volume
    return out


def _apply_thread_cap():
    cap = os.environ.get("KOLMO_THREADS")
    if cap:
        try:
            n = max(1, int(cap))
        except ValueError:
            return
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _cell_ids(field: SpaceTimeField, x, y, t) -> np.ndarray:
    """Input-grid cell id of points, -1 when outside the grid hull."""
    dx, dy, dt = field.spacings
    nx, ny, nt = field.values.shape
    ix = np.floor((x - (field.xs[0] - dx / 2)) / dx).astype(np.int64)
    iy = np.floor((y - (field.ys[0] - dy / 2)) / dy).astype(np.int64)
    it = np.floor((t - (field.ts[0] - dt / 2)) / dt).astype(np.int64)
    inside = (
        (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny) & (it >= 0) & (it < nt)
    )
    flat = (ix * ny + iy) * nt + it
    return np.where(inside, flat, -1)


def convolve(
    kernel: HomogeneousKernel,
    f: SpaceTimeField,
    out: Optional[SpaceTimeField] = None,
) -> SpaceTimeField:
    """Group convolution of a compactly supported field by a Riemann sum.

    Sums kernel(zeta^{-1} o z) * f(zeta) * cell_volume over the nonzero cells
    of f for every output cell; the input cell containing z is skipped.  The
    output grid defaults to the input grid.
    """
    if f.values.size == 0:
        raise ValueError("empty input grid")
    target = f if out is None else out

    support = np.nonzero(f.values)
    if len(support[0]) == 0:
        return SpaceTimeField(
            target.xs, target.ys, target.ts, np.zeros_like(target.values)
        )
    sx = f.xs[support[0]]
    sy = f.ys[support[1]]
    st = f.ts[support[2]]
    sf = f.values[support]
    s_cell = _cell_ids(f, sx, sy, st)

    X, Y, T = target.meshgrid()
    ox = X.ravel()
    oy = Y.ravel()
    ot = T.ravel()
    o_cell = _cell_ids(f, ox, oy, ot)

    _apply_thread_cap()
    vals = _convolve_loop(
        ox, oy, ot, o_cell, sx, sy, st, sf, s_cell,
        kernel._code, f.cell_volume,
    )
    return SpaceTimeField(
        target.xs, target.ys, target.ts, vals.reshape(target.values.shape)
    )


def lp_norm(
    f: SpaceTimeField,
    p: float,
    region: Optional[BallSpec] = None,
) -> float:
    """Riemann-sum L^p norm over a ball region or the whole grid."""
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    sel = f.valid()
    if region is not None:
        X, Y, T = f.meshgrid()
        from .group import contains  # local import to avoid cycle noise

        sel = sel & contains(region, Point(X, Y, T))
    total = np.sum(np.abs(f.values[sel]) ** p) * f.cell_volume
    return float(total ** (1.0 / p))


def paired_exponent(kernel: HomogeneousKernel, p: float) -> float:
    """The q with 1/q = 1/p - alpha/6 for this kernel."""
    inv_q = 1.0 / p - kernel.degree_alpha / 6.0
    if inv_q <= 0:
        raise ValueError(f"no admissible q for p={p}, alpha={kernel.degree_alpha}")
    return 1.0 / inv_q


def gain_ratio(
    kernel: HomogeneousKernel,
    f: SpaceTimeField,
    p: float,
    q: float,
) -> float:
    """||G_f||_q / ||f||_p with the exponent pairing 1/q = 1/p - alpha/6 enforced."""
    expected_q = paired_exponent(kernel, p)
    if abs(1.0 / q - 1.0 / expected_q) > 1e-12:
        raise ValueError(
            f"exponent mismatch: kernel alpha={kernel.degree_alpha} pairs p={p} "
            f"with q={expected_q:g}, got q={q}"
        )
    denom = lp_norm(f, p)
    if denom == 0.0:
        raise ValueError("gain ratio undefined for the zero field")
    conv = convolve(kernel, f)
    return lp_norm(conv, q) / denom


def bump_field(
    field: SpaceTimeField,
    center: tuple[float, float, float],
    widths: tuple[float, float, float],
    amplitude: float = 1.0,
) -> SpaceTimeField:
    """Smooth compactly supported bump (1 - s^2)^3 per axis on the given grid."""
    X, Y, T = field.meshgrid()

    def prof(q, c, w):
        s = (q - c) / w
        return np.where(np.abs(s) < 1.0, (1.0 - s**2) ** 3, 0.0)

    vals = (
        amplitude
        * prof(X, center[0], widths[0])
        * prof(Y, center[1], widths[1])
        * prof(T, center[2], widths[2])
    )
    return SpaceTimeField(field.xs, field.ys, field.ts, vals)


def seeded_bump_family(
    template: SpaceTimeField,
    count: int,
    seed: int,
    support_cells: int = 7,
) -> list[SpaceTimeField]:
    """Deterministic family of bump fields with ~support_cells-wide supports."""
    rng = np.random.default_rng(seed)
    dx, dy, dt = template.spacings
    out = []
    for _ in range(count):
        wx = 0.5 * support_cells * dx * rng.uniform(0.8, 1.4)
        wy = 0.5 * support_cells * dy * rng.uniform(0.8, 1.4)
        wt = 0.5 * support_cells * dt * rng.uniform(0.8, 1.4)
        cx = rng.uniform(template.xs[0] + wx, template.xs[-1] - wx)
        cy = rng.uniform(template.ys[0] + wy, template.ys[-1] - wy)
        ct = rng.uniform(template.ts[0] + wt, template.ts[-1] - wt)
        amp = rng.uniform(0.5, 2.0)
        out.append(bump_field(template, (cx, cy, ct), (wx, wy, wt), amp))
    return out
