"""Change of variables (x, y, t) -> (xi, eta, tau) = (b(x,y,t), y, t).

When d_x b keeps one sign the map is a diffeomorphism and the general drift
b d_y turns into the canonical xi d_eta form: the transformed equation has

    a_tilde  = (d_x b)^2 a,
    b0_tilde = -a d_xx b + b0 d_x b + xi d_y b - d_t b,

both evaluated at (x(xi, eta, tau), eta, tau), where the second-derivative
identity d^2 x/d xi^2 = -b_xx / b_x^3 collapses the Jacobian term without
numerically differentiating the inverse map.  The inverse x(xi, eta, tau)
is found by safeguarded Newton iteration with a maintained bisection bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .dsl import (
    Bin,
    Checkerboard,
    CoefficientSet,
    Coefficient,
    Expr,
    Lit,
    Unary,
    Var,
    coefficient_evaluator,
)
from .fields import Field, Grid, SpaceTimeField
from .solver import ProblemSpec

__all__ = [
    "TransformedCoefficients",
    "invert_b",
    "transform_coeffs",
    "transform_problem",
    "pushforward_field",
    "pullback_field",
]

RESIDUAL_TOL = 1e-12


def _linear_x_slope(e: Expr) -> Optional[float]:
    """Slope c when the expression is exactly c*x (or x); None otherwise.

    Recognized closed forms skip finite differencing so the identity cases
    (b = x, b = c x) transform exactly.
    """
    if isinstance(e, Var) and e.name == "x":
        return 1.0
    if isinstance(e, Unary) and e.op == "-":
        inner = _linear_x_slope(e.operand)
        return None if inner is None else -inner
    if isinstance(e, Bin) and e.op == "*":
        if isinstance(e.left, Lit):
            inner = _linear_x_slope(e.right)
            return None if inner is None else e.left.value * inner
        if isinstance(e.right, Lit):
            inner = _linear_x_slope(e.left)
            return None if inner is None else e.right.value * inner
    return None


def _mentions_time(e) -> bool:
    if not isinstance(e, Expr):
        return True  # callables: assume time dependence
    if isinstance(e, Var):
        return e.name == "t"
    if isinstance(e, Checkerboard):
        return True  # cell index depends on t
    if isinstance(e, Unary):
        return _mentions_time(e.operand)
    if isinstance(e, Bin):
        return _mentions_time(e.left) or _mentions_time(e.right)
    from .dsl import Call

    if isinstance(e, Call):
        return any(_mentions_time(a) for a in e.args)
    return False


def _derivatives_of_b(b: Coefficient) -> Callable:
    """(x, y, t) -> (bx, by, bt, bxx), closed form for linear-in-x expressions,
    centered differences otherwise (h = 1e-5 scale for first derivatives,
    5e-3 scale for the second, balancing truncation against roundoff)."""
    slope = _linear_x_slope(b) if isinstance(b, Expr) else None
    if slope is not None:
        def exact(x, y, t):
            shape = np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(t))
            z = np.zeros(shape)
            return (np.full(shape, slope), z, z, z.copy())

        return exact

    fn = coefficient_evaluator(b)

    def numeric(x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape, t.shape)

        def at(dx=0.0, dy=0.0, dt=0.0):
            return np.broadcast_to(
                np.asarray(fn(x + dx, y + dy, t + dt), dtype=float), shape
            )

        h1x = 1e-5 * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
        h1y = 1e-5 * max(1.0, float(np.max(np.abs(y))) if y.size else 1.0)
        h1t = 1e-5 * max(1.0, float(np.max(np.abs(t))) if t.size else 1.0)
        h2 = 5e-3 * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
        bx = (at(dx=h1x) - at(dx=-h1x)) / (2 * h1x)
        by = (at(dy=h1y) - at(dy=-h1y)) / (2 * h1y)
        bt = (at(dt=h1t) - at(dt=-h1t)) / (2 * h1t)
        bxx = (at(dx=h2) - 2.0 * at() + at(dx=-h2)) / h2**2
        return bx, by, bt, bxx

    return numeric


@dataclass
class TransformedCoefficients:
    """Coefficients of the reduced equation on (xi, eta, tau) coordinates."""

    a_tilde: Callable
    b0_tilde: Callable
    inverse_map: Callable
    xi_range: tuple[float, float]
    x_range: tuple[float, float]
    slice_image: Callable = None  # (eta, tau) -> (lo, hi) image of b over x_range


def invert_b(
    cs: CoefficientSet,
    xi,
    eta,
    tau,
    x_range: tuple[float, float],
    clamp: bool = False,
) -> Union[float, np.ndarray]:
    """Solve b(x, eta, tau) = xi for x in x_range (elementwise on arrays).

    Safeguarded Newton: steps that leave the current bracket fall back to
    bisection, so convergence is guaranteed for monotone b.  Residual
    tolerance 1e-12 * max(1, |xi|).  Raises if xi leaves the range of b
    (unless clamp=True, which projects onto it) or if b is not monotone
    across x_range.
    """
    shape = np.broadcast_shapes(np.shape(xi), np.shape(eta), np.shape(tau))
    scalar_out = shape == ()
    xi = np.broadcast_to(np.asarray(xi, dtype=float), shape)
    eta_b = np.broadcast_to(np.asarray(eta, dtype=float), shape)
    tau_b = np.broadcast_to(np.asarray(tau, dtype=float), shape)
    b_fn = coefficient_evaluator(cs.b)
    deriv = _derivatives_of_b(cs.b)

    xlo, xhi = x_range
    lo = np.full(shape, float(xlo))
    hi = np.full(shape, float(xhi))
    b_lo = np.broadcast_to(np.asarray(b_fn(lo, eta_b, tau_b), dtype=float), shape)
    b_hi = np.broadcast_to(np.asarray(b_fn(hi, eta_b, tau_b), dtype=float), shape)
    increasing = b_hi >= b_lo
    if not (np.all(increasing) or not np.any(increasing)):
        raise ValueError("d_x b changes sign across x_range")

    b_min = np.minimum(b_lo, b_hi)
    b_max = np.maximum(b_lo, b_hi)
    target = xi
    if clamp:
        target = np.clip(xi, b_min, b_max)
    else:
        bad = (xi < b_min) | (xi > b_max)
        if np.any(bad):
            worst = float(np.asarray(xi)[bad].ravel()[0])
            raise ValueError(
                f"xi={worst:g} outside the range of b over x_range={x_range}"
            )

    sign = np.where(increasing, 1.0, -1.0)
    x = 0.5 * (lo + hi)
    tol = RESIDUAL_TOL * np.maximum(1.0, np.abs(target))
    for _ in range(100):
        fx = (
            np.broadcast_to(np.asarray(b_fn(x, eta_b, tau_b), dtype=float), shape)
            - target
        )
        if np.all(np.abs(fx) <= tol):
            break
        # tighten the bracket using monotonicity
        high_side = sign * fx > 0
        hi = np.where(high_side, x, hi)
        lo = np.where(high_side, lo, x)
        bx = deriv(x, eta_b, tau_b)[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - fx / bx
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        x = np.where(ok, newton, 0.5 * (lo + hi))
    if scalar_out:
        return float(x)
    return x


def transform_coeffs(
    cs: CoefficientSet,
    x_range: tuple[float, float],
    y_range: tuple[float, float] = (-1.0, 1.0),
    t_range: tuple[float, float] = (-1.0, 1.0),
) -> TransformedCoefficients:
    """Push the coefficient set through the reduction.

    x_range is the x interval of the source domain (the inversion bracket);
    y_range and t_range bound the (eta, tau) samples used for the image
    computation.  The admissible xi window is the intersection over sampled
    (eta, tau) of the slice images of b, shrunk by a 1% margin, so every xi
    in it inverts for every (eta, tau).
    """
    a_fn = coefficient_evaluator(cs.a)
    b0_fn = coefficient_evaluator(cs.b0)
    b_fn = coefficient_evaluator(cs.b)
    deriv = _derivatives_of_b(cs.b)
    time_free = not _mentions_time(cs.b) if isinstance(cs.b, Expr) else False

    cache: dict = {}

    def inverse_map(xi, eta, tau, clamp: bool = False):
        xi_a = np.asarray(xi, dtype=float)
        if time_free and xi_a.ndim > 0:
            key = (
                xi_a.shape,
                float(xi_a.flat[0]),
                float(xi_a.flat[-1]),
                float(np.asarray(eta).flat[0]) if np.ndim(eta) else float(eta),
                bool(clamp),
            )
            hit = cache.get(key)
            if (
                hit is not None
                and np.array_equal(hit[0], xi_a)
                and np.array_equal(hit[1], np.asarray(eta))
            ):
                return hit[2]
        x = invert_b(cs, xi_a, eta, tau, x_range, clamp=clamp)
        if time_free and xi_a.ndim > 0:
            if len(cache) > 16:
                cache.clear()
            cache[key] = (xi_a.copy(), np.asarray(eta).copy(), x)
        return x

    def a_tilde(xi, eta, tau):
        x = inverse_map(xi, eta, tau, clamp=True)
        bx = deriv(x, eta, tau)[0]
        a = a_fn(x, eta, tau)
        return bx * a * bx

    def b0_tilde(xi, eta, tau):
        x = inverse_map(xi, eta, tau, clamp=True)
        bx, by, bt, bxx = deriv(x, eta, tau)
        a = a_fn(x, eta, tau)
        b0 = b0_fn(x, eta, tau)
        return -a * bxx + b0 * bx + np.asarray(xi, dtype=float) * by - bt

    def slice_image(eta, tau):
        xs = np.linspace(x_range[0], x_range[1], 41)
        shape = np.broadcast_shapes(np.shape(eta), np.shape(tau))
        eta_b = np.broadcast_to(np.asarray(eta, dtype=float), shape)[..., None]
        tau_b = np.broadcast_to(np.asarray(tau, dtype=float), shape)[..., None]
        vals = np.asarray(b_fn(xs, eta_b, tau_b), dtype=float)
        return vals.min(axis=-1), vals.max(axis=-1)

    # Admissible xi window: intersection of slice images over sampled (eta, tau),
    # shrunk by a 1% margin so every xi inside inverts for every (eta, tau).
    etas = np.linspace(y_range[0], y_range[1], 17)
    taus = np.linspace(t_range[0], t_range[1], 9)
    E, T = np.meshgrid(etas, taus, indexing="ij")
    lo_img, hi_img = slice_image(E, T)
    lo_env = float(np.max(lo_img))
    hi_env = float(np.min(hi_img))
    span = hi_env - lo_env
    xi_range = (lo_env + 0.01 * span, hi_env - 0.01 * span)

    return TransformedCoefficients(
        a_tilde=a_tilde,
        b0_tilde=b0_tilde,
        inverse_map=inverse_map,
        xi_range=xi_range,
        x_range=tuple(x_range),
        slice_image=slice_image,
    )


def transform_problem(
    spec: ProblemSpec,
) -> tuple[ProblemSpec, TransformedCoefficients]:
    """Build the reduced problem on the (xi, eta, tau) grid.

    The transformed coefficient set keeps mu and swaps in the pushed-forward
    a and b0 with the canonical drift (b = xi, the new first coordinate), so
    the result is an L2-class problem.  Initial and boundary data are pulled
    through the inverse map; ghost-cell queries just outside the xi window
    are clamped onto it.
    """
    grid = spec.grid
    tc = transform_coeffs(
        spec.coefficients,
        (grid.xlo, grid.xhi),
        (grid.ylo, grid.yhi),
        (grid.t0, grid.t1),
    )
    xi_lo, xi_hi = tc.xi_range

    tgrid = Grid(
        xi_lo, xi_hi, grid.ylo, grid.yhi,
        grid.nx, grid.ny, grid.dt, grid.t0, grid.t1,
    )

    from .dsl import parse  # deferred: avoid import order surprises

    tcs = CoefficientSet(
        a=tc.a_tilde,
        b0=tc.b0_tilde,
        b=parse("x"),
        mu=spec.coefficients.mu,
    )

    init_fn = coefficient_evaluator(spec.initial)
    bdry_fn = coefficient_evaluator(spec.boundary)

    def initial_t(xi, eta, tau):
        x = tc.inverse_map(xi, eta, tau, clamp=True)
        return init_fn(x, eta, tau)

    def boundary_t(xi, eta, tau):
        x = tc.inverse_map(xi, eta, tau, clamp=True)
        return bdry_fn(x, eta, tau)

    tspec = ProblemSpec(
        tgrid,
        tcs,
        initial_t,
        boundary_t,
        equation_class="L2",
        periodic_y=spec.periodic_y,
        checkpoint_every=spec.checkpoint_every,
        validate_coefficients=False,
    )
    return tspec, tc


def pushforward_field(
    u: SpaceTimeField,
    tc: TransformedCoefficients,
    xi_axis: Optional[np.ndarray] = None,
) -> SpaceTimeField:
    """Resample a field from (x, y, t) to (xi, eta, tau) coordinates.

    Samples u at (x(xi, eta, tau), eta, tau) with bilinear interpolation in
    each time slice; target cells whose xi falls outside the slice image of b
    at that (eta, tau) are masked out.
    """
    xi_axis = np.asarray(xi_axis if xi_axis is not None else u.xs, dtype=float)
    vals = np.empty((len(xi_axis), len(u.ys), len(u.ts)))
    mask = np.empty(vals.shape, dtype=bool)
    XI, ETA = np.meshgrid(xi_axis, u.ys, indexing="ij")
    for k, tau in enumerate(u.ts):
        x = tc.inverse_map(XI, ETA, tau, clamp=True)
        vals[:, :, k] = _interp2(u.xs, u.ys, u.values[:, :, k], x, ETA)
        img_lo, img_hi = tc.slice_image(ETA, tau)
        mask[:, :, k] = (XI >= img_lo) & (XI <= img_hi)
    return SpaceTimeField(xi_axis, u.ys, u.ts, vals, mask=mask)


def pullback_field(
    v: SpaceTimeField,
    cs: CoefficientSet,
    x_axis: np.ndarray,
) -> SpaceTimeField:
    """Resample a (xi, eta, tau) field back to (x, y, t) coordinates."""
    b_fn = coefficient_evaluator(cs.b)
    x_axis = np.asarray(x_axis, dtype=float)
    vals = np.empty((len(x_axis), len(v.ys), len(v.ts)))
    mask = np.empty(vals.shape, dtype=bool)
    X, Y = np.meshgrid(x_axis, v.ys, indexing="ij")
    xi_lo, xi_hi = float(v.xs[0]), float(v.xs[-1])
    for k, t in enumerate(v.ts):
        xi = np.asarray(b_fn(X, Y, t), dtype=float)
        vals[:, :, k] = _interp2(v.xs, v.ys, v.values[:, :, k], xi, Y)
        mask[:, :, k] = (xi >= xi_lo) & (xi <= xi_hi)
    return SpaceTimeField(x_axis, v.ys, v.ts, vals, mask=mask)


def _interp2(xs, ys, vals, xq, yq):
    from .fields import _interp_2d

    return _interp_2d(xs, ys, vals, xq, yq)
