"""Empirical regularity measurements on solver trajectories.

Everything here measures quantities the theory constrains qualitatively:
oscillation decay over shrinking past balls (the contraction factor behind
Holder continuity), sup-vs-average ratios over past balls (the Moser-type
constant), level-set fractions over anisotropic cubes, the group-adapted
cut-off with its drift-sign property, a kernel-weighted averaging bound with
its partition-of-unity identity, and log-log Holder exponent fits.  The probe
never asserts the theory's unquantified constants; it reports measured values
and the signs/ratios that are forced (ratios below one, positive exponents).

Region integrals are cell-inclusion Riemann sums (a cell counts iff its
center lies in the region); oscillations are sampled max - min, the discrete
surrogate for essential sup/inf.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .fields import Field, SpaceTimeField, Trajectory
from .group import BallSpec, CubeSpec, ORIGIN, Point, compose, contains, dilate, group_norm, inverse
from .kernel import gamma

__all__ = [
    "ProbeConfig",
    "ProbeReport",
    "HolderFit",
    "PoincareResult",
    "oscillation",
    "oscillation_decay",
    "moser_ratio",
    "level_set_fraction",
    "cutoff_phi",
    "cutoff_sign_check",
    "poincare_check",
    "holder_fit",
    "probe_trajectory",
    "past_ball_mask",
    "unit_past_ball_volume",
]

FieldLike = Union[Trajectory, SpaceTimeField]


def _as_space_time(u: FieldLike) -> SpaceTimeField:
    if isinstance(u, Trajectory):
        return u.as_space_time()
    if isinstance(u, SpaceTimeField):
        return u
    raise TypeError(f"expected Trajectory or SpaceTimeField, got {type(u).__name__}")


@dataclass(frozen=True)
class ProbeConfig:
    """Parameters of a probe run.

    theta is the ball shrink factor of the oscillation-decay and cut-off
    machinery (theta^(1/6) < 1/2 whenever cut-offs are built), alpha/beta the
    time/space fractions of the level-set measurements, p the Moser exponent,
    radii the strictly decreasing probe radii, h_levels the level-set
    thresholds.
    """

    theta: float
    radii: tuple[float, ...]
    alpha: float = 0.5
    beta: float = 0.5
    p: float = 2.0
    h_levels: tuple[float, ...] = (0.25, 0.5)

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if not 0 < self.alpha < 1 or not 0 < self.beta < 1:
            raise ValueError("alpha, beta must lie in (0, 1)")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        r = tuple(self.radii)
        if len(r) < 1 or any(b >= a for a, b in zip(r, r[1:])):
            raise ValueError("radii must be strictly decreasing")

    def require_cutoff_valid(self):
        if not self.theta ** (1.0 / 6.0) < 0.5:
            raise ValueError(
                f"cut-off construction needs theta^(1/6) < 1/2, got theta={self.theta}"
            )


# --------------------------------------------------------------------------
# Ball geometry over sampled fields


def past_ball_mask(u: SpaceTimeField, center: Point, r: float) -> np.ndarray:
    """Boolean mask of grid cells whose centers lie in the past ball.

    Component bounds prefilter the grid before the norm root-finder runs, so
    large grids stay cheap.
    """
    X, Y, T = u.meshgrid()
    w = compose(inverse(center), Point(X, Y, T))
    rough = (
        (np.abs(w.x) <= r)
        & (np.abs(w.y) <= r**3)
        & (w.t < 0)
        & (w.t >= -(r**2))
    )
    mask = np.zeros(X.shape, dtype=bool)
    if np.any(rough):
        idx = np.nonzero(rough)
        norms = group_norm(Point(w.x[idx], w.y[idx], w.t[idx]))
        mask[idx] = norms <= r
    return mask & u.valid()


def oscillation(u: FieldLike, center: Point, r: float) -> float:
    """max - min of the samples inside the past ball of radius r."""
    f = _as_space_time(u)
    mask = past_ball_mask(f, center, r)
    if not np.any(mask):
        raise ValueError(
            f"no samples in the past ball of radius {r:g}: radius below grid resolution"
        )
    vals = f.values[mask]
    return float(np.max(vals) - np.min(vals))


def oscillation_decay(
    u: FieldLike,
    center: Point,
    cfg: ProbeConfig,
) -> list[dict]:
    """Ratios osc(theta * r) / osc(r) per probe radius.

    The theory predicts a uniform factor below one; a ratio is reported as 0
    when the outer oscillation sits at the noise floor (locally constant).
    """
    f = _as_space_time(u)
    scale = float(np.max(np.abs(f.values[f.valid()]))) or 1.0
    rows = []
    for r in cfg.radii:
        outer = oscillation(f, center, r)
        inner = oscillation(f, center, cfg.theta * r)
        ratio = 0.0 if outer < 1e-13 * scale else inner / outer
        rows.append({"r": r, "osc_outer": outer, "osc_inner": inner, "ratio": ratio})
    return rows


def moser_ratio(u: FieldLike, center: Point, r: float, p: float = 2.0) -> float:
    """Empirical constant sup_{half ball} u^p * r^6 / integral_{ball} u^p.

    Requires u >= 0 on the ball; negative samples are clipped to zero with a
    warning.  The r^6 factor makes the value dilation invariant (homogeneous
    dimension 6).
    """
    f = _as_space_time(u)
    outer = past_ball_mask(f, center, r)
    inner = past_ball_mask(f, center, r / 2.0)
    if not np.any(outer) or not np.any(inner):
        raise ValueError(f"past ball at radius {r:g} not resolved by the grid")
    vals = f.values
    if np.any(vals[outer] < 0):
        warnings.warn("negative samples clipped to 0 in moser_ratio", stacklevel=2)
    clipped = np.clip(vals, 0.0, None)
    integral = float(np.sum(clipped[outer] ** p)) * f.cell_volume
    if integral == 0.0:
        raise ValueError("zero integral over the past ball")
    sup_p = float(np.max(clipped[inner])) ** p
    return sup_p * r**6 / integral


def level_set_fraction(u: Field, region: CubeSpec, h: float) -> float:
    """Fraction of the spatial cube K (|x| <= r, |y| <= 8 r^3 around the
    center) occupied by {u >= h} at this time level."""
    X, Y = u.grid.meshgrid()
    r = region.radius
    sel = (np.abs(X - region.center.x) <= r) & (
        np.abs(Y - region.center.y) <= 8.0 * r**3
    )
    n = int(np.count_nonzero(sel))
    if n == 0:
        raise ValueError("cube region contains no grid cells")
    return float(np.count_nonzero(u.values[sel] >= h)) / n


# --------------------------------------------------------------------------
# Cut-off construction


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _smoothstep_d1(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30.0 * s * s * (1.0 - s) ** 2, 0.0)


def _smoothstep_d2(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s), 0.0)


def _chi(s, theta: float, r: float):
    """C^2 profile: 1 below theta^(1/6) r, 0 above r, quintic in between.

    The slope obeys 0 <= -chi' <= 2 / ((1 - theta^(1/6)) r) and chi'' is
    bounded by C / r^2; both enter the probe's kernel-weighted integrals.
    """
    lo = theta ** (1.0 / 6.0) * r
    return 1.0 - _smoothstep((np.asarray(s, dtype=float) - lo) / (r - lo))


def _chi_d1(s, theta: float, r: float):
    lo = theta ** (1.0 / 6.0) * r
    return -_smoothstep_d1((np.asarray(s, dtype=float) - lo) / (r - lo)) / (r - lo)


def _chi_d2(s, theta: float, r: float):
    lo = theta ** (1.0 / 6.0) * r
    return -_smoothstep_d2((np.asarray(s, dtype=float) - lo) / (r - lo)) / (r - lo) ** 2


def _phi0_argument(theta, r, y, t):
    bracket = np.maximum(theta**2 * np.asarray(y, dtype=float) ** 2 - 6.0 * np.asarray(t, dtype=float) * r**4, 0.0)
    return bracket ** (1.0 / 6.0), bracket


def _check_cutoff_params(theta: float, r: float):
    if not r > 0:
        raise ValueError("cut-off radius must be positive")
    if not theta ** (1.0 / 6.0) < 0.5:
        raise ValueError(
            f"cut-off needs theta^(1/6) < 1/2, got theta={theta} "
            f"(theta^(1/6)={theta ** (1 / 6):.3f})"
        )


def cutoff_phi(theta: float, r: float, z: Point):
    """Group-adapted cut-off phi = phi0 * phi1 in [0, 1].

    phi0 = chi([theta^2 y^2 - 6 t r^4]^(1/6)) and phi1 = chi(theta |x|);
    identically 1 on the past ball of radius theta*r and supported (for
    t <= 0) in the box |x| <= r/theta, |y| <= r^3/theta, -r^2 <= t.  For
    t > 0 the bracket is clamped at zero, extending phi0 smoothly by 1.
    """
    _check_cutoff_params(theta, r)
    x, y, t = z
    g, _ = _phi0_argument(theta, r, y, t)
    phi0 = _chi(g, theta, r)
    phi1 = _chi(theta * np.abs(np.asarray(x, dtype=float)), theta, r)
    out = phi0 * phi1
    if np.ndim(out) == 0:
        return float(out)
    return out


def _drift_of_phi0(theta: float, r: float, x, y, t):
    """(x d_y - d_t) phi0, analytically: chi'(g)/6 * B^(-5/6) * (6 r^4 + 2 theta^2 x y)."""
    g, bracket = _phi0_argument(theta, r, y, t)
    dchi = _chi_d1(g, theta, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        pw = np.where(bracket > 0, bracket ** (-5.0 / 6.0), 0.0)
    return dchi * (pw / 6.0) * (6.0 * r**4 + 2.0 * theta**2 * np.asarray(x) * np.asarray(y))


def cutoff_sign_check(
    theta: float,
    r: float,
    samples: int = 100_000,
    seed: int = 42,
    drift_fn: Optional[Callable] = None,
) -> float:
    """Max of (x d_y - d_t) phi0 over seeded samples of the support box.

    The bracket 6 r^4 + 2 theta^2 x y stays positive on the box |x| <= r/theta,
    |y| <= r^3/theta, -r^2 <= t <= 0, and chi' <= 0, so the true value is <= 0
    everywhere; the returned max should sit at roundoff scale.  drift_fn
    overrides the evaluated quantity (used by the self-test that flips the
    profile slope).
    """
    _check_cutoff_params(theta, r)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-r / theta, r / theta, samples)
    y = rng.uniform(-(r**3) / theta, r**3 / theta, samples)
    t = rng.uniform(-(r**2), 0.0, samples)
    fn = drift_fn if drift_fn is not None else _drift_of_phi0
    vals = fn(theta, r, x, y, t)
    return float(np.max(vals))


# --------------------------------------------------------------------------
# Kernel-weighted averaging (the Poincare-type inequality probe)


_UNIT_BALL_CACHE: dict = {}


def unit_past_ball_volume(n: int = 96) -> float:
    """Midpoint-rule volume of the unit past ball (deterministic, cached)."""
    key = ("vol", n)
    if key not in _UNIT_BALL_CACHE:
        xs = np.linspace(-1, 1, n, endpoint=False) + 1.0 / n
        ys = np.linspace(-1, 1, n, endpoint=False) + 1.0 / n
        ts = np.linspace(-1, 0, n // 2, endpoint=False) + 1.0 / n
        X, Y, T = np.meshgrid(xs, ys, ts, indexing="ij")
        norms = group_norm(Point(X, Y, T))
        frac = np.count_nonzero(norms <= 1.0) / norms.size
        _UNIT_BALL_CACHE[key] = frac * 2.0 * 2.0 * 1.0
    return _UNIT_BALL_CACHE[key]


def _unit_past_ball_points(count: int) -> np.ndarray:
    """Deterministic interior points of the unit past ball, shape (count, 3)."""
    key = ("pts", count)
    if key not in _UNIT_BALL_CACHE:
        from .dsl import halton_points
        from .fields import Box

        pts = []
        n = count * 8
        while len(pts) < count:
            xs, ys, ts = halton_points(Box(-1, 1, -1, 1, -1, -1e-9), n)
            norms = group_norm(Point(xs, ys, ts))
            keep = norms <= 0.95
            pts = list(zip(xs[keep], ys[keep], ts[keep]))
            n *= 2
        _UNIT_BALL_CACHE[key] = np.asarray(pts[:count])
    return _UNIT_BALL_CACHE[key]


@dataclass
class PoincareResult:
    lhs: float
    rhs_integral: float  # integral of |d_x w|^2 over the big ball
    rhs: float  # theta^2 r^2 * rhs_integral
    i0: float
    i1_values: list[float]
    implied_c: float

    def as_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs_integral": self.rhs_integral,
            "rhs": self.rhs,
            "i0": self.i0,
            "i1_values": self.i1_values,
            "implied_c": self.implied_c,
        }


def _kernel_average(
    w_fn: Callable,
    z: Point,
    center: Point,
    theta: float,
    r: float,
    tau_nodes: int,
    window: tuple[int, int],
    sigmas: float,
) -> float:
    """Quadrature of the weighted average I1(z): kernel x w x cut-off derivatives.

    Works in coordinates centered at the cut-off center.  The tau integral is
    a midpoint rule on [-r^2, 0); per tau level the (xi, eta) plane is covered
    by a window adapted to the kernel's Gaussian scales (sqrt(dt/2) in xi,
    sqrt(dt^3/6) in eta, `sigmas` standard deviations wide), outside which the
    kernel is negligible; inside, the cell sum is a plain Riemann sum.
    """
    zc = compose(inverse(center), z)  # centered coordinates
    zx, zy, zt = float(zc.x), float(zc.y), float(zc.t)
    n_xi, n_eta = window
    dtau = r**2 / tau_nodes
    taus = -(r**2) + (np.arange(tau_nodes) + 0.5) * dtau

    total = 0.0
    for tau in taus:
        T = zt - tau
        if T <= 0:
            continue
        sig_xi = np.sqrt(T / 2.0)
        sig_eta = np.sqrt(T**3 / 6.0)
        xi_c = -zx / 2.0
        xi_lo = xi_c - sigmas * sig_xi
        xi_hi = xi_c + sigmas * sig_xi
        dxi = (xi_hi - xi_lo) / n_xi
        xis = xi_lo + (np.arange(n_xi) + 0.5) * dxi
        # eta window follows the xi-dependent kernel center
        eta_c_lo = zy + (zx + xi_lo) * T / 2.0
        eta_c_hi = zy + (zx + xi_hi) * T / 2.0
        lo = min(eta_c_lo, eta_c_hi) - sigmas * sig_eta
        hi = max(eta_c_lo, eta_c_hi) + sigmas * sig_eta
        deta = (hi - lo) / n_eta
        etas = lo + (np.arange(n_eta) + 0.5) * deta

        XI, ETA = np.meshgrid(xis, etas, indexing="ij")
        kern = gamma(Point(zx, zy, zt), Point(XI, ETA, tau))
        drift = _drift_of_phi0(theta, r, XI, ETA, tau)
        phi1 = _chi(theta * np.abs(XI), theta, r)
        g0, _ = _phi0_argument(theta, r, ETA, tau)
        phi0 = _chi(g0, theta, r)
        s = np.abs(XI)
        d2phi1 = theta**2 * _chi_d2(theta * s, theta, r)
        # absolute coordinates for the field sample
        zeta = compose(center, Point(XI, ETA, tau))
        wv = w_fn(zeta.x, zeta.y, zeta.t)
        integrand = (-kern * wv * phi1 * drift) - (phi0 * d2phi1 * kern * wv)
        total += float(np.sum(integrand)) * dxi * deta * dtau
    return total


def poincare_check(
    w: Union[FieldLike, Callable],
    r: float,
    theta: float,
    center: Point = ORIGIN,
    z_count: int = 6,
    tau_nodes: int = 1024,
    window: tuple[int, int] = (64, 96),
    sigmas: float = 10.0,
    lattice_count: int = 256,
) -> PoincareResult:
    """Both sides of the kernel-weighted averaging inequality.

    Returns lhs = integral over the small past ball of (w - I0)_+^2, the
    gradient integral over the big ball (intersected with the sampled box for
    field inputs), rhs = theta^2 r^2 times it, I0 = max of the weighted
    averages I1 over a lattice of the small ball, and the implied constant
    lhs / rhs.  w may be a trajectory/field (interpolated) or a callable.
    """
    _check_cutoff_params(theta, r)
    if callable(w) and not isinstance(w, (Trajectory, SpaceTimeField)):
        w_fn = w
        w_field = None
    else:
        w_field = _as_space_time(w)
        w_fn = lambda x, y, t: w_field.sample(x, y, t)

    # lattice of the small past ball for I1 and for the lhs integral
    unit = _unit_past_ball_points(lattice_count)
    small = [
        compose(center, dilate(theta * r, Point(*p))) for p in unit[: max(z_count, 1)]
    ]
    i1_vals = [
        _kernel_average(w_fn, z, center, theta, r, tau_nodes, window, sigmas)
        for z in small
    ]
    i0 = max(i1_vals)

    ball_pts = [compose(center, dilate(theta * r, Point(*p))) for p in unit]
    wz = np.array([float(np.asarray(w_fn(p.x, p.y, p.t))) for p in ball_pts])
    excess = np.clip(wz - i0, 0.0, None)
    vol_small = unit_past_ball_volume() * (theta * r) ** 6
    lhs = float(np.mean(excess**2) * vol_small)

    # gradient integral over the big past ball
    big_r = r / theta
    if w_field is not None:
        mask = past_ball_mask(w_field, center, big_r)
        dx = w_field.spacings[0]
        grad = np.gradient(w_field.values, dx, axis=0)
        rhs_integral = float(np.sum(grad[mask] ** 2) * w_field.cell_volume)
    else:
        # midpoint grid over the bounding box of the big past ball
        n = 48
        xs = np.linspace(-big_r, big_r, n, endpoint=False) + big_r / n
        ys = np.linspace(-(big_r**3), big_r**3, n, endpoint=False) + big_r**3 / n
        ts = np.linspace(-(big_r**2), 0, n, endpoint=False) + big_r**2 / (2 * n)
        X, Y, T = np.meshgrid(xs, ys, ts, indexing="ij")
        abs_pts = compose(center, Point(X, Y, T))
        Xa, Ya, Ta = abs_pts.x, abs_pts.y, abs_pts.t
        inside = group_norm(Point(X, Y, T)) <= big_r
        h = 1e-6 * max(1.0, big_r)
        grad = (w_fn(Xa + h, Ya, Ta) - w_fn(Xa - h, Ya, Ta)) / (2 * h)
        cell = (2 * big_r / n) * (2 * big_r**3 / n) * (big_r**2 / n)
        rhs_integral = float(np.sum(np.asarray(grad)[inside] ** 2) * cell)

    rhs = theta**2 * r**2 * rhs_integral
    implied_c = lhs / rhs if rhs > 0 else (0.0 if lhs == 0.0 else float("inf"))
    return PoincareResult(lhs, rhs_integral, rhs, i0, i1_vals, implied_c)


# --------------------------------------------------------------------------
# Holder exponent fit


@dataclass
class HolderFit:
    alpha: float
    residual: float
    pointwise_constant: float
    oscillations: list[tuple[float, float]]
    locally_constant: bool = False

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "residual": self.residual,
            "pointwise_constant": self.pointwise_constant,
            "oscillations": [list(t) for t in self.oscillations],
            "locally_constant": self.locally_constant,
        }


def holder_fit(u: FieldLike, center: Point, radii: Sequence[float]) -> HolderFit:
    """Least-squares slope of log osc(r) against log r over the given radii.

    The slope is the empirical Holder exponent in the group quasi-distance;
    the residual is the RMS misfit of the log-log line.  Also reports the
    pointwise constant sup |u(z) - u(center)| / d(center, z)^alpha over the
    largest ball.  Fields that are constant at the probe scale short-circuit
    to a locally_constant report.
    """
    radii = list(radii)
    if len(radii) < 4:
        raise ValueError("need at least 4 radii for a Holder fit")
    f = _as_space_time(u)
    scale = float(np.max(np.abs(f.values[f.valid()]))) or 1.0
    oscs = [oscillation(f, center, r) for r in radii]
    pairs = list(zip(radii, oscs))
    if max(oscs) < 1e-13 * scale:
        return HolderFit(0.0, 0.0, 0.0, pairs, locally_constant=True)
    lr = np.log(np.asarray(radii, dtype=float))
    lo = np.log(np.maximum(np.asarray(oscs, dtype=float), 1e-300))
    slope, intercept = np.polyfit(lr, lo, 1)
    fitted = slope * lr + intercept
    residual = float(np.sqrt(np.mean((fitted - lo) ** 2)))

    mask = past_ball_mask(f, center, max(radii))
    X, Y, T = f.meshgrid()
    pts = Point(X[mask], Y[mask], T[mask])
    d = group_norm(compose(inverse(center), pts))
    uc = float(f.sample(center.x, center.y, center.t))
    with np.errstate(divide="ignore"):
        ratios = np.abs(f.values[mask] - uc) / np.where(d > 0, d, np.inf) ** slope
    pointwise = float(np.max(ratios)) if ratios.size else 0.0
    return HolderFit(float(slope), residual, pointwise, pairs)


# --------------------------------------------------------------------------
# Orchestration


@dataclass
class ProbeReport:
    center: tuple[float, float, float]
    theta: float
    p: float
    radii: list[float]
    oscillation_rows: list[dict]
    max_ratio: float
    moser: dict
    holder: dict
    level_sets: list[dict] = field(default_factory=list)
    poincare: Optional[dict] = None

    def as_dict(self) -> dict:
        out = {
            "center": list(self.center),
            "theta": self.theta,
            "p": self.p,
            "radii": self.radii,
            "oscillation": self.oscillation_rows,
            "max_ratio": self.max_ratio,
            "moser": self.moser,
            "holder": self.holder,
            "level_sets": self.level_sets,
        }
        if self.poincare is not None:
            out["poincare"] = self.poincare
        return out


def probe_trajectory(
    u: FieldLike,
    center: Point,
    cfg: ProbeConfig,
) -> ProbeReport:
    """Run the standard measurement suite on one trajectory."""
    f = _as_space_time(u)
    if cfg.radii[0] > 0.25 * (f.xs[-1] - f.xs[0]) / 2.0 + 1e-12:
        warnings.warn(
            "largest probe radius exceeds a quarter of the domain half-width; "
            "boundary effects may leak into the measured balls",
            stacklevel=2,
        )

    scale = float(np.max(np.abs(f.values[f.valid()]))) or 1.0
    rows = []
    for r in cfg.radii:
        try:
            outer = oscillation(f, center, r)
            inner = oscillation(f, center, cfg.theta * r)
            ratio = 0.0 if outer < 1e-13 * scale else inner / outer
            rows.append(
                {"r": r, "osc_outer": outer, "osc_inner": inner, "ratio": ratio}
            )
        except ValueError as exc:
            rows.append({"r": r, "error": str(exc)})
    max_ratio = max((row["ratio"] for row in rows if "ratio" in row), default=0.0)

    moser = {}
    for r in cfg.radii:
        try:
            moser[f"r={r:g}"] = moser_ratio(f, center, r, cfg.p)
        except ValueError as exc:
            moser[f"r={r:g}"] = f"error: {exc}"

    fit_radii = list(cfg.radii)
    if len(fit_radii) < 4:
        lo, hi = min(fit_radii), max(fit_radii)
        fit_radii = list(np.geomspace(hi, lo, 5))
    try:
        fit = holder_fit(f, center, fit_radii)
        holder = fit.as_dict()
    except ValueError as exc:
        holder = {"error": str(exc), "oscillations": []}
    return ProbeReport(
        center=(float(center.x), float(center.y), float(center.t)),
        theta=cfg.theta,
        p=cfg.p,
        radii=list(cfg.radii),
        oscillation_rows=rows,
        max_ratio=max_ratio,
        moser=moser,
        holder=holder,
    )
