"""Translation group, anisotropic dilations, and ball/cube geometry on R^{2+1}.

The degenerate operator  d_x(a d_x u) + b0 d_x u + x d_y u - d_t u  is left
invariant under the non-commutative composition

    (x, y, t) o (xi, eta, tau) = (xi + x, eta + y - tau*x, t + tau),

and homogeneous of degree 2 under the dilations

    delta_mu(x, y, t) = (mu*x, mu^3*y, mu^2*t).

All functions accept floats or numpy arrays in the Point components and
broadcast elementwise, so grid-sized membership queries stay vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "Point",
    "BallSpec",
    "CubeSpec",
    "ORIGIN",
    "compose",
    "inverse",
    "dilate",
    "group_norm",
    "distance",
    "contains",
    "estimate_lambda",
]

Scalar = Union[float, np.ndarray]

# Homogeneous dimension of the dilation family (1 + 3 + 2).
HOMOGENEOUS_DIM = 6

# Relative tolerance of the norm root-finder.
NORM_RTOL = 1e-12


class Point(NamedTuple):
    """A point z = (x, y, t): x has dilation degree 1, y degree 3, t degree 2."""

    x: Scalar
    y: Scalar
    t: Scalar


ORIGIN = Point(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BallSpec:
    """Anisotropic ball of radius r around center; past_only keeps t < center.t.

    Membership is ||center^{-1} o z|| <= r (closed), intersected with the
    strict half-space {t < center.t} when past_only is set.
    """

    center: Point
    radius: float
    past_only: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class CubeSpec:
    """Anisotropic cube: |x| <= r, |y| <= 8 r^3, |t| <= r^2 after moving
    center to the origin by the group law (not a Euclidean shift)."""

    center: Point
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"cube radius must be positive, got {self.radius}")


def compose(p: Point, q: Point) -> Point:
    """Group product p o q = (xi + x, eta + y - tau*x, t + tau)."""
    px, py, pt = p
    qx, qy, qt = q
    return Point(qx + px, qy + py - qt * px, pt + qt)


def inverse(p: Point) -> Point:
    """Group inverse (x, y, t)^{-1} = (-x, -y - t*x, -t)."""
    px, py, pt = p
    return Point(-px, -py - pt * px, -pt)


def dilate(mu: Scalar, p: Point) -> Point:
    """Anisotropic dilation delta_mu(x, y, t) = (mu x, mu^3 y, mu^2 t), mu > 0."""
    if np.any(np.asarray(mu) <= 0):
        raise ValueError(f"dilation parameter must be positive, got {mu}")
    return Point(mu * p.x, mu**3 * p.y, mu**2 * p.t)


def _norm_objective(p: Point, r: Scalar) -> Scalar:
    x, y, t = p
    return x**2 / r**2 + y**2 / r**6 + t**2 / r**4


def group_norm(p: Point) -> Scalar:
    """Anisotropic norm: the unique r > 0 with x^2/r^2 + y^2/r^6 + t^2/r^4 = 1.

    The left side is strictly decreasing in r, so the root is bracketed by
    [m/2, 2m] with m = max(|x|, |y|^{1/3}, |t|^{1/2}) and found by bisection
    to relative tolerance 1e-12.  The origin maps to 0.  Scales exactly under
    dilation: ||delta_mu z|| = mu ||z||.
    """
    x = np.asarray(p.x, dtype=float)
    y = np.asarray(p.y, dtype=float)
    t = np.asarray(p.t, dtype=float)
    x, y, t = np.broadcast_arrays(x, y, t)

    m = np.maximum(np.abs(x), np.maximum(np.cbrt(np.abs(y)), np.sqrt(np.abs(t))))
    nonzero = m > 0
    # Avoid 0/0 inside the bisection; masked out at the end.
    m_safe = np.where(nonzero, m, 1.0)

    lo = 0.5 * m_safe
    hi = 2.0 * m_safe
    pt = Point(x, y, t)
    # Bracket ratio 4, relative tolerance 1e-12: 64 halvings are ample.
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        too_small = _norm_objective(pt, mid) > 1.0
        lo = np.where(too_small, mid, lo)
        hi = np.where(too_small, hi, mid)
        if np.all(hi - lo <= NORM_RTOL * lo):
            break
    r = np.where(nonzero, 0.5 * (lo + hi), 0.0)
    if r.ndim == 0:
        return float(r)
    return r


def distance(z0: Point, z: Point) -> Scalar:
    """Quasi-distance ||z0^{-1} o z||.

    Left invariant and 1-homogeneous under dilation, but NOT symmetric in its
    arguments; callers must not assume d(z0, z) == d(z, z0).
    """
    return group_norm(compose(inverse(z0), z))


def contains(region: Union[BallSpec, CubeSpec], p: Point) -> Union[bool, np.ndarray]:
    """Membership test for balls (closed, optionally past-only) and cubes."""
    if isinstance(region, BallSpec):
        inside = distance(region.center, p) <= region.radius
        if region.past_only:
            inside = inside & (np.asarray(p.t) < region.center.t)
    elif isinstance(region, CubeSpec):
        w = compose(inverse(region.center), p)
        r = region.radius
        inside = (
            (np.abs(np.asarray(w.x)) <= r)
            & (np.abs(np.asarray(w.y)) <= 8 * r**3)
            & (np.abs(np.asarray(w.t)) <= r**2)
        )
    else:
        raise TypeError(f"unsupported region type {type(region).__name__}")
    if np.ndim(inside) == 0:
        return bool(inside)
    return inside


def _sample_unit_cube(rng: np.random.Generator, n: int) -> Point:
    """Uniform samples of the unit cube |x|<=1, |y|<=8, |t|<=1."""
    x = rng.uniform(-1.0, 1.0, n)
    y = rng.uniform(-8.0, 8.0, n)
    t = rng.uniform(-1.0, 1.0, n)
    return Point(x, y, t)


def estimate_lambda(r: float, sample_count: int, seed: int = 42) -> float:
    """Monte-Carlo estimate of the smallest Lambda with
    C_{r/Lambda} subset B_r subset C_{Lambda r}.

    Bisects over Lambda; for each candidate the two inclusions are checked on
    a fixed seeded sample (cube points dilated to C_{r/Lambda}, ball points
    kept by rejection from the bounding box of B_r).  An estimate over
    samples, not a proof.
    """
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    rng = np.random.default_rng(seed)

    cube_unit = _sample_unit_cube(rng, sample_count)
    cube_norms = group_norm(cube_unit)  # ||delta_{r/L} u|| = (r/L)||u||

    # B_r fits in |x|<=r, |y|<=r^3, |t|<=r^2; rejection-sample inside.
    bx = rng.uniform(-r, r, sample_count)
    by = rng.uniform(-(r**3), r**3, sample_count)
    bt = rng.uniform(-(r**2), r**2, sample_count)
    ball = Point(bx, by, bt)
    keep = group_norm(ball) <= r
    ball = Point(bx[keep], by[keep], bt[keep])

    def both_inclusions_hold(lam: float) -> bool:
        # C_{r/lam} subset B_r: each dilated cube sample has norm (r/lam)||u||.
        if np.any((r / lam) * cube_norms > r):
            return False
        # B_r subset C_{lam r}: componentwise cube bounds at radius lam*r.
        s = lam * r
        return bool(
            np.all(np.abs(ball.x) <= s)
            and np.all(np.abs(ball.y) <= 8 * s**3)
            and np.all(np.abs(ball.t) <= s**2)
        )

    lo, hi = 1.0, 8.0
    if not both_inclusions_hold(hi):  # pragma: no cover - sanity guard
        raise RuntimeError("sandwich constant exceeds search bracket [1, 8]")
    if both_inclusions_hold(lo):
        return lo
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if both_inclusions_hold(mid):
            hi = mid
        else:
            lo = mid
    return hi
