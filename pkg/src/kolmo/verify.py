"""One-shot verification suite behind the `verify` CLI subcommand.

Runs a fast, fully seeded pass over every identity and property the library
is built on and returns a JSON-ready summary.  All randomness flows from the
single seed argument, and floats are formatted through repr, so two runs with
the same seed produce byte-identical reports.
"""

from __future__ import annotations

import numpy as np

from . import __version__
from .dsl import CoefficientSet, EvalError, evaluate, parse, to_source, validate
from .fields import Box, Grid, SpaceTimeField
from .group import (
    BallSpec,
    CubeSpec,
    ORIGIN,
    Point,
    compose,
    contains,
    dilate,
    distance,
    estimate_lambda,
    group_norm,
    inverse,
)
from .kernel import gamma, gamma_dx, gamma_mass, gamma_origin, l0_residual
from .potentials import (
    bump_field,
    convolve,
    gain_ratio,
    gamma_dx_kernel,
    gamma_kernel,
    lp_norm,
)
from .probe import cutoff_phi, cutoff_sign_check, poincare_check
from .solver import ProblemSpec, StepDiagnostics, solve
from .transform import invert_b, transform_coeffs

__all__ = ["run_verify"]


def _suite(name, passed, detail):
    return {"name": name, "passed": bool(passed), "detail": detail}


def _group_axioms(seed):
    rng = np.random.default_rng(seed)
    p, q, s = (
        Point(*rng.uniform(-10, 10, (3, 10_000)))
        for _ in range(3)
    )
    lhs = compose(compose(p, q), s)
    rhs = compose(p, compose(q, s))
    assoc = max(
        float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        for a, b in zip(lhs, rhs)
    )
    ident = max(
        float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        for a, b in zip(compose(ORIGIN, p), p)
    )
    invd = max(
        float(np.max(np.abs(np.asarray(c))))
        for c in compose(inverse(p), p)
    )
    mus = rng.uniform(1e-2, 1e2, 2000)
    pts = Point(*rng.uniform(-5, 5, (3, 2000)))
    hom = float(
        np.max(
            np.abs(group_norm(dilate(mus, pts)) - mus * group_norm(pts))
            / (mus * np.maximum(group_norm(pts), 1e-300))
        )
    )
    # the inverse law cancels t*x terms of size ~100, so ulp-level residue
    # (~1.4e-14) is unavoidable; the acceptance tolerance 1e-12 governs
    ok = assoc < 1e-12 and ident < 1e-14 and invd < 1e-12 and hom < 1e-10
    return _suite(
        "group_axioms",
        ok,
        f"assoc={assoc!r} identity={ident!r} inverse={invd!r} norm_homogeneity={hom!r}",
    )


def _ball_cube_sandwich(seed):
    lam = estimate_lambda(1.0, 200_000, seed=seed)
    lam2 = estimate_lambda(2.0, 200_000, seed=seed)
    ok = lam >= 1.0 and abs(lam - lam2) < 1e-6
    return _suite(
        "ball_cube_sandwich", ok, f"lambda_hat={lam!r} dilation_drift={abs(lam - lam2)!r}"
    )


def _gamma_identities(seed):
    rng = np.random.default_rng(seed)
    v = gamma_origin(Point(0.0, 0.0, 1.0))
    val_err = float(abs(v - np.sqrt(3.0) / (2.0 * np.pi)))
    mass_err = max(
        abs(gamma_mass(dt, 0.0) - 1.0) for dt in (0.01, 0.1, 1.0, 4.0)
    )
    z = Point(*rng.uniform(-2, 2, (3, 5000)))
    mus = rng.uniform(1e-2, 1e2, 5000)
    g = np.asarray(gamma_origin(z))
    hom_abs = np.abs(np.asarray(gamma_origin(dilate(mus, z))) - mus**-4.0 * g)
    denom = np.maximum(mus**-4.0 * g, 1e-280)
    hom = float(np.max(hom_abs / denom))
    zeta = Point(*rng.uniform(-2, 2, (3, 5000)))
    two = np.asarray(gamma(z, zeta))
    moved = np.asarray(gamma_origin(compose(inverse(zeta), z)))
    tr = float(np.max(np.abs(two - moved) / np.maximum(np.abs(moved), 1e-280)))
    orders = []
    for _ in range(5):
        z0 = Point(rng.uniform(-1, 1), rng.uniform(-0.3, 0.3), rng.uniform(0.5, 2.0))
        res = [abs(l0_residual(z0, h)) for h in (1e-2, 5e-3, 2.5e-3)]
        if res[-1] > 0:
            orders.append(np.log2(res[0] / res[1]))
    order_ok = all(abs(o - 2.0) < 0.3 for o in orders)
    ok = val_err < 1e-12 and mass_err < 1e-6 and hom < 1e-12 and tr < 1e-10 and order_ok
    return _suite(
        "gamma_identities",
        ok,
        f"value_err={val_err!r} mass_err={mass_err!r} homogeneity={hom!r} "
        f"translation={tr!r} residual_orders={[repr(round(o, 3)) for o in orders]}",
    )


def _dsl_roundtrip(seed):
    exprs = [
        "1 + 2*x^2",
        "-x^2 + sin(y)*cos(t)",
        "min(x, max(y, t))",
        "step(x) * sqrt(abs(y)) + floor(t)",
        "checkerboard(7, 0.1, 0.1, 0.1, 0.5, 2.0)",
    ]
    round_ok = all(parse(to_source(parse(s))) == parse(s) for s in exprs)
    cb = parse("checkerboard(7, 0.1, 0.1, 0.1, 0.5, 2.0)")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3, 3, (3, 50_000))
    vals = evaluate(cb, (pts[0], pts[1], pts[2]))
    range_ok = bool(np.all((vals >= 0.5) & (vals <= 2.0)))
    repeat_ok = bool(
        np.array_equal(vals, evaluate(cb, (pts[0], pts[1], pts[2])))
    )
    box = Box(-1, 1, -1, 1, 0, 1)
    good = validate(CoefficientSet.from_strings("1", "0", "x", 0.5), box).passed
    bad = not validate(CoefficientSet.from_strings("1", "0", "1", 0.5), box).passed
    try:
        evaluate(parse("1/(x - x)"), (1.0, 0.0, 0.0))
        div_ok = False
    except EvalError:
        div_ok = True
    ok = round_ok and range_ok and repeat_ok and good and bad and div_ok
    return _suite(
        "dsl_roundtrip",
        ok,
        f"reparse={round_ok} cb_range={range_ok} cb_repeat={repeat_ok} "
        f"validate_pass={good} validate_fail={bad} div_guard={div_ok}",
    )


def _solver_basics(seed):
    rng = np.random.default_rng(seed)
    cs = CoefficientSet.from_strings(
        "checkerboard(11, 0.17, 0.11, 0.07, 0.6, 1.5)", "0", "x", 0.5
    )
    grid = Grid(-1.0, 1.0, -0.3, 0.3, 32, 24, 1.0, 0.0, 0.02)

    const_spec = ProblemSpec(
        grid, cs, lambda x, y, t: np.full_like(x, 2.5), lambda x, y, t: 2.5,
        validate_coefficients=False,
    )
    const_drift = float(np.max(np.abs(solve(const_spec).values[-1] - 2.5)))

    diag = StepDiagnostics()
    bump = lambda x, y, t: np.exp(-(x / 0.3) ** 2) * np.exp(-(y / 0.1) ** 2)
    cons_spec = ProblemSpec(
        grid, cs, bump, lambda x, y, t: 0.0,
        periodic_y=True, validate_coefficients=False, checkpoint_every=1,
    )
    traj = solve(cons_spec, diagnostics=diag)
    cell = grid.dx * grid.dy
    masses = traj.values.sum(axis=(1, 2)) * cell
    mass_err = float(
        np.max(np.abs(np.diff(masses) - np.asarray(diag.boundary_flux_sums)))
    )
    scale = float(np.max(np.abs(traj.values[0])))
    minimum = float(traj.values.min())
    max_prin = minimum >= -1e-12 * scale

    traj2 = solve(cons_spec)
    determin = bool(np.array_equal(traj.values[-1], traj2.values[-1]))
    ok = (
        const_drift == 0.0
        and mass_err < 1e-12 * max(1.0, float(np.max(masses)))
        and max_prin
        and determin
    )
    return _suite(
        "solver_basics",
        ok,
        f"const_drift={const_drift!r} mass_err={mass_err!r} "
        f"min_value={minimum!r} deterministic={determin}",
    )


def _potential_identities(seed):
    box = Box(-2, 2, -2, 2, 0, 2)
    tmpl = SpaceTimeField.from_function(lambda x, y, t: 0.0 * x, box, (24, 24, 24))
    f = bump_field(tmpl, (0.0, 0.0, 0.5), (0.5, 0.5, 0.3))
    g = bump_field(tmpl, (0.3, -0.2, 0.8), (0.4, 0.4, 0.25))
    k = gamma_kernel()
    ca = convolve(k, f)
    cb_ = convolve(k, g)
    fg = SpaceTimeField(tmpl.xs, tmpl.ys, tmpl.ts, 2.0 * f.values - 0.5 * g.values)
    cfg_ = convolve(k, fg)
    lin = float(
        np.max(np.abs(cfg_.values - (2.0 * ca.values - 0.5 * cb_.values)))
    )
    zero = convolve(k, SpaceTimeField(tmpl.xs, tmpl.ys, tmpl.ts, 0.0 * tmpl.values))
    zero_ok = float(np.max(np.abs(zero.values))) == 0.0

    rng = np.random.default_rng(seed)
    zs = Point(*rng.uniform(0.3, 1.5, (3, 50)))
    defects = []
    for kern in (gamma_kernel(), gamma_dx_kernel()):
        for mu in (0.5, 2.0):
            lhs = np.asarray(kern.evaluator(dilate(mu, zs)))
            rhs = mu ** (kern.degree_alpha - 6.0) * np.asarray(kern.evaluator(zs))
            defects.append(
                float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-280)))
            )
    hom = max(defects)
    try:
        gain_ratio(gamma_kernel(), f, 2.0, 5.0)
        mismatch_ok = False
    except ValueError:
        mismatch_ok = True
    ok = lin < 1e-10 and zero_ok and hom < 1e-8 and mismatch_ok
    return _suite(
        "potential_identities",
        ok,
        f"linearity={lin!r} zero_ok={zero_ok} kernel_homogeneity={hom!r} "
        f"exponent_guard={mismatch_ok}",
    )


def _reduction_forms(seed):
    cs_x = CoefficientSet.from_strings("1", "0", "x", 0.5)
    tc = transform_coeffs(cs_x, (-1, 1))
    noop = abs(float(tc.a_tilde(0.3, 0.1, 0.0)) - 1.0) + abs(
        float(tc.b0_tilde(0.3, 0.1, 0.0))
    )
    cs_2x = CoefficientSet.from_strings("1", "0", "2*x", 0.5)
    tc2 = transform_coeffs(cs_2x, (-1, 1))
    two = abs(float(tc2.a_tilde(0.4, 0.0, 0.0)) - 4.0) + abs(
        float(tc2.b0_tilde(0.4, 0.0, 0.0))
    )
    cs_sin = CoefficientSet.from_strings("1", "0", "x + 0.1*sin(y)", 0.5)
    tc3 = transform_coeffs(cs_sin, (-1, 1), (-2, 2), (0, 1))
    xi0, eta0 = 0.4, 1.1
    sin_err = float(abs(float(tc3.b0_tilde(xi0, eta0, 0.5)) - xi0 * 0.1 * np.cos(eta0)))
    rng = np.random.default_rng(seed)
    cs_cub = CoefficientSet.from_strings("1", "0", "x^3 + x", 0.5)
    xis = rng.uniform(-1.9, 1.9, 500)
    xr = invert_b(cs_cub, xis, 0.0, 0.0, (-1.2, 1.2))
    resid = float(np.max(np.abs(xr**3 + xr - xis)))
    ok = noop == 0.0 and two == 0.0 and sin_err < 1e-8 and resid <= 1e-12 * 1.9
    return _suite(
        "reduction_forms",
        ok,
        f"noop={noop!r} scale2={two!r} sin_drift_err={sin_err!r} invert_resid={resid!r}",
    )


def _cutoff_checks(seed):
    theta, r = 1.0 / 128.0, 1.0
    inside = cutoff_phi(theta, r, Point(0.0, 0.0, -0.5 * (theta * r) ** 2))
    outside = cutoff_phi(theta, r, Point(2 * r / theta, 0.0, -0.1))
    worst = cutoff_sign_check(theta, r, 100_000, seed=seed)
    ok = inside == 1.0 and outside == 0.0 and worst <= 1e-8
    return _suite(
        "cutoff_checks",
        ok,
        f"inside={inside!r} outside={outside!r} drift_sign_max={worst!r}",
    )


def _kernel_average_identity(seed):
    one = lambda x, y, t: np.ones(
        np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(t))
    )
    res = poincare_check(one, 1.0, 1.0 / 128.0, z_count=2)
    ok = res.i0 >= 1.0 - 1e-3 and res.lhs <= 1e-12
    return _suite(
        "kernel_average_identity",
        ok,
        f"i0={float(res.i0)!r} lhs={float(res.lhs)!r} rhs={float(res.rhs)!r}",
    )


def run_verify(seed: int = 42) -> dict:
    """Run every invariant suite; returns the JSON-ready summary."""
    suites = [
        _group_axioms(seed),
        _ball_cube_sandwich(seed),
        _gamma_identities(seed),
        _dsl_roundtrip(seed),
        _solver_basics(seed),
        _potential_identities(seed),
        _reduction_forms(seed),
        _cutoff_checks(seed),
        _kernel_average_identity(seed),
    ]
    return {
        "tool_version": __version__,
        "seed": seed,
        "passed": all(s["passed"] for s in suites),
        "suites": suites,
    }
