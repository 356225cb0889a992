"""Closed-form heat kernel of the model operator d_x^2 u + x d_y u - d_t u.

The kernel with pole at the origin is

    G(x, y, t) = sqrt(3) / (2 pi t^2) * exp[-(x^2 + 3xy/t + 3y^2/t^2) / t]

for t > 0 and 0 otherwise; the two-point kernel follows by composing with the
group translation, G(z, zeta) = G(zeta^{-1} o z).  Values scale like
G(delta_mu z) = mu^{-4} G(z) and each time slice carries unit mass.

Exponents are evaluated by Horner's rule in 1/(t - tau) to keep the mixed
powers (t-tau)^{-1} .. (t-tau)^{-3} from cancelling catastrophically at small
time separations, and everything is computed in log space so extreme inputs
underflow to exactly 0 instead of producing NaN.
"""

from __future__ import annotations

import numpy as np

from .group import Point, Scalar, compose, group_norm, inverse

__all__ = [
    "gamma_origin",
    "gamma",
    "gamma_dx",
    "gamma_mass",
    "l0_residual",
    "GAMMA_ALPHA",
    "GAMMA_DX_ALPHA",
]

_LOG_PREFACTOR = float(np.log(np.sqrt(3.0) / (2.0 * np.pi)))

# Dilation bookkeeping for the potential estimates: a kernel homogeneous of
# degree alpha - 6 gains L^p -> L^q with 1/q = 1/p - alpha/6.
GAMMA_ALPHA = 2.0
GAMMA_DX_ALPHA = 1.0


def _as_float_arrays(*vals):
    return np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in vals))


def _finalize(arr: np.ndarray) -> Scalar:
    if arr.ndim == 0:
        return float(arr)
    return arr


def gamma_origin(z: Point) -> Scalar:
    """Kernel value with pole at the origin; 0 for t <= 0, never NaN."""
    x, y, t = _as_float_arrays(z.x, z.y, z.t)
    pos = t > 0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        s = np.where(pos, 1.0 / np.where(pos, t, 1.0), 0.0)
        quad = s * (x * x + s * (3.0 * x * y + s * (3.0 * y * y)))
        log_t = np.where(pos, np.log(np.where(pos, t, 1.0)), 0.0)
        log_val = _LOG_PREFACTOR - 2.0 * log_t - quad
        out = np.where(pos, np.exp(log_val), 0.0)
    return _finalize(out)


def gamma(z: Point, zeta: Point) -> Scalar:
    """Two-point kernel value; 0 whenever t <= tau."""
    x, y, t, xi, eta, tau = _as_float_arrays(z.x, z.y, z.t, zeta.x, zeta.y, zeta.t)
    dt = t - tau
    dy = y - eta
    pos = dt > 0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        s = np.where(pos, 1.0 / np.where(pos, dt, 1.0), 0.0)
        a = x * x + x * xi + xi * xi
        b = 3.0 * (x + xi) * dy
        c = 3.0 * dy * dy
        quad = s * (a + s * (b + s * c))
        log_dt = np.where(pos, np.log(np.where(pos, dt, 1.0)), 0.0)
        out = np.where(pos, np.exp(_LOG_PREFACTOR - 2.0 * log_dt - quad), 0.0)
    return _finalize(out)


def gamma_dx(z: Point, zeta: Point) -> Scalar:
    """Partial derivative of gamma(z, zeta) in the pole coordinate xi.

    Chain rule on the exponent polynomial gives the closed form
    -[(x + 2 xi)/(t-tau) + 3(y-eta)/(t-tau)^2] * gamma(z, zeta);
    zero on {t <= tau}.
    """
    x, y, t, xi, eta, tau = _as_float_arrays(z.x, z.y, z.t, zeta.x, zeta.y, zeta.t)
    dt = t - tau
    pos = dt > 0
    g = np.asarray(gamma(z, zeta))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(pos, 1.0 / np.where(pos, dt, 1.0), 0.0)
        factor = -(s * (x + 2.0 * xi) + s * s * 3.0 * (y - eta))
        out = np.where(pos, factor * g, 0.0)
    return _finalize(out)


def gamma_mass(t: float, tau: float, half_width: float = 8.0, grid_n: int = 120) -> float:
    """Integral of the kernel slice over (x, y); analytically 1 for t > tau.

    Tensor-product Gauss-Legendre quadrature over a window of half_width
    standard deviations per axis (marginal scales sqrt(2 dt) in x and
    sqrt(2 dt^3 / 3) in y), which covers all but < 1e-10 of the mass.
    """
    if not t > tau:
        raise ValueError(f"need t > tau, got t={t}, tau={tau}")
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    dt = t - tau
    wx = half_width * np.sqrt(2.0 * dt)
    wy = half_width * np.sqrt(2.0 * dt**3 / 3.0)
    nodes, weights = np.polynomial.legendre.leggauss(grid_n)
    xs = nodes * wx
    ys = nodes * wy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = gamma(Point(X, Y, t), Point(0.0, 0.0, tau))
    w2 = np.outer(weights * wx, weights * wy)
    return float(np.sum(vals * w2))


def l0_residual(z: Point, h: float) -> float:
    """Centered finite-difference residual of the model operator on the kernel.

    Evaluates d_x^2 G + x d_y G - d_t G at z with step h; away from the pole
    the true value is 0 and the stencil leaves an O(h^2) remainder.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if group_norm(z) < 10.0 * h:
        raise ValueError(
            f"point too close to the pole: ||z||={group_norm(z):.3g} < 10h={10 * h:.3g}"
        )
    x, y, t = float(z.x), float(z.y), float(z.t)

    def g(px, py, pt):
        return gamma_origin(Point(px, py, pt))

    uxx = (g(x + h, y, t) - 2.0 * g(x, y, t) + g(x - h, y, t)) / h**2
    uy = (g(x, y + h, t) - g(x, y - h, t)) / (2.0 * h)
    ut = (g(x, y, t + h) - g(x, y, t - h)) / (2.0 * h)
    return uxx + x * uy - ut
