"""Command-line entry point.

Subcommands: gamma | solve | transform | probe | potential | verify.
Data goes to files or stdout, logs go to stderr, and every report embeds the
tool version plus the problem-file content hash where one is in play.  Exit
codes: 0 success, 1 validation or runtime failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .dsl import EvalError, ParseError
from .fields import AnisotropyAdvisory
from .group import Point
from .kernel import gamma, gamma_mass, gamma_origin, l0_residual
from .probe import ProbeConfig, probe_trajectory
from .problem import (
    ProblemFileError,
    load_problem,
    read_field_csv,
    read_trajectory,
    write_field_csv,
    write_trajectory,
)
from .solver import SolverError, solve
from .verify import run_verify

log = logging.getLogger("kolmo")


def _point(text: str) -> Point:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected three comma-separated numbers, got {text!r}"
        )
    return Point(float(parts[0]), float(parts[1]), float(parts[2]))


def _radii(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad radii list {text!r}") from None
    return vals


def _emit_json(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kolmo",
        description="Degenerate Kolmogorov-type diffusion: geometry, kernels, "
        "solver, reduction, and regularity probes.",
    )
    ap.add_argument("--seed", type=int, default=42, help="seed for all randomized suites")
    ap.add_argument("--version", action="version", version=f"kolmo {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gamma", help="evaluate the kernel or check its identities")
    gsub = g.add_subparsers(dest="gamma_command", required=True)
    ge = gsub.add_parser("eval", help="print the kernel value at a point")
    ge.add_argument("--point", type=_point, required=True, metavar="x,y,t")
    ge.add_argument("--pole", type=_point, default=None, metavar="xi,eta,tau")
    gc = gsub.add_parser("check", help="run the kernel identity suite")
    gc.add_argument("--out", default=None, help="write the JSON report here")

    s = sub.add_parser("solve", help="march a problem file and write a trajectory")
    s.add_argument("--problem", required=True, help="problem file (.cfg)")
    s.add_argument("--out", required=True, help="trajectory output directory")
    s.add_argument("--no-validate", action="store_true",
                   help="skip coefficient hypothesis validation")
    s.add_argument("--no-plot", action="store_true",
                   help="skip the final-state figure")

    t = sub.add_parser("transform", help="emit the reduced problem in canonical form")
    t.add_argument("--problem", required=True)
    t.add_argument("--emit", required=True, help="path of the derived problem file")

    p = sub.add_parser("probe", help="measure regularity quantities on a trajectory")
    p.add_argument("--traj", required=True, help="trajectory directory from solve")
    p.add_argument("--center", type=_point, default=Point(0.0, 0.0, 0.0), metavar="x,y,t")
    p.add_argument("--radii", type=_radii, default=(0.4, 0.2, 0.1), metavar="r1,r2,...")
    p.add_argument("--theta", type=float, default=0.125)
    p.add_argument("--p", type=float, default=2.0, help="Moser exponent")
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")
    p.add_argument("--no-plot", action="store_true")

    q = sub.add_parser("potential", help="convolve a field and report the gain ratio")
    q.add_argument("--kernel", choices=("gamma", "gamma-dx"), required=True)
    q.add_argument("--input", required=True, help="field CSV with x,y,t,value rows")
    q.add_argument("--p", type=float, default=2.0)
    q.add_argument("--out", default=None, help="output field CSV path")

    v = sub.add_parser("verify", help="run every invariant suite")
    v.add_argument("--out", default=None, help="write the JSON summary here")

    return ap


def _cmd_gamma(args) -> int:
    if args.gamma_command == "eval":
        if args.pole is None:
            value = gamma_origin(args.point)
        else:
            value = gamma(args.point, args.pole)
        sys.stdout.write(f"{value!r}\n")
        return 0
    rng = np.random.default_rng(args.seed)
    z = Point(*rng.uniform(-2, 2, (3, 2000)))
    zeta = Point(*rng.uniform(-2, 2, (3, 2000)))
    from .group import compose, dilate, inverse

    mus = rng.uniform(1e-2, 1e2, 2000)
    g0 = np.asarray(gamma_origin(z))
    hom = float(
        np.max(
            np.abs(np.asarray(gamma_origin(dilate(mus, z))) - mus**-4.0 * g0)
            / np.maximum(mus**-4.0 * g0, 1e-280)
        )
    )
    tr = float(
        np.max(
            np.abs(
                np.asarray(gamma(z, zeta))
                - np.asarray(gamma_origin(compose(inverse(zeta), z)))
            )
        )
    )
    masses = {f"dt={dt:g}": float(abs(gamma_mass(dt, 0.0) - 1.0)) for dt in (0.01, 0.1, 1.0, 4.0)}
    res = [abs(l0_residual(Point(0.0, 0.0, 1.0), h)) for h in (1e-2, 5e-3, 2.5e-3)]
    orders = [float(np.log2(res[i] / res[i + 1])) for i in range(2)]
    report = {
        "tool_version": __version__,
        "seed": args.seed,
        "normalization_defect": masses,
        "homogeneity_defect": hom,
        "translation_defect": tr,
        "residual_orders": orders,
        "passed": bool(
            max(masses.values()) < 1e-6
            and hom < 1e-12
            and tr < 1e-10
            and all(abs(o - 2.0) < 0.3 for o in orders)
        ),
    }
    _emit_json(report, args.out)
    return 0 if report["passed"] else 1


def _cmd_solve(args) -> int:
    pf = load_problem(args.problem)
    spec = pf.to_problem_spec(validate_coefficients=not args.no_validate)
    out_dir = args.out or pf.output_dir
    traj = solve(spec)
    write_trajectory(traj, out_dir, spec_hash=pf.spec_hash)
    log.info("trajectory with %d levels written to %s", len(traj.times), out_dir)
    if not args.no_plot:
        from .plots import plot_field_heatmap

        fig_path = os.path.join(out_dir, "final_state.png")
        plot_field_heatmap(traj.final, fig_path, title=f"t = {traj.times[-1]:g}")
        log.info("wrote %s", fig_path)
    return 0


def _cmd_transform(args) -> int:
    from .fields import SpaceTimeField
    from .transform import transform_problem

    pf = load_problem(args.problem)
    spec = pf.to_problem_spec(validate_coefficients=False)
    tspec, tc = transform_problem(spec)
    base = os.path.dirname(os.path.abspath(args.emit))
    os.makedirs(base, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.emit))[0]

    g = tspec.grid
    n_t = 7
    ts = np.linspace(g.t0, g.t1, n_t)
    # sample on the transformed grid plus one ghost margin per side
    xs = np.concatenate(([g.xlo - g.dx], g.xs, [g.xhi + g.dx]))
    ys = np.concatenate(([g.ylo - g.dy], g.ys, [g.yhi + g.dy]))
    X, Y, T = np.meshgrid(xs, ys, ts, indexing="ij")

    tables = {
        "a_tilde": tspec.coefficients.a,
        "b0_tilde": tspec.coefficients.b0,
        "initial": tspec.initial,
        "boundary": tspec.boundary,
    }
    names = {}
    for name, fn in tables.items():
        vals = np.empty(X.shape)
        for k in range(n_t):
            vals[:, :, k] = np.broadcast_to(
                np.asarray(fn(X[:, :, k], Y[:, :, k], float(ts[k])), dtype=float),
                X[:, :, k].shape,
            )
        csv_name = f"{stem}_{name}.csv"
        write_field_csv(
            SpaceTimeField(xs, ys, ts, vals), os.path.join(base, csv_name)
        )
        names[name] = csv_name

    lines = [
        "# derived problem in canonical drift form",
        f"# source_hash: {pf.spec_hash}",
        f"# tool_version: {__version__}",
        "",
        "[coefficients]",
        f"a = @table:{names['a_tilde']}",
        f"b0 = @table:{names['b0_tilde']}",
        "b = x",
        f"mu = {pf.coefficients.mu!r}",
        "",
        "[grid]",
        f"x = {g.xlo!r}, {g.xhi!r}",
        f"y = {g.ylo!r}, {g.yhi!r}",
        f"nx = {g.nx}",
        f"ny = {g.ny}",
        f"dt = {g.dt!r}",
        f"t = {g.t0!r}, {g.t1!r}",
        "",
        "[initial]",
        f"expr = @table:{names['initial']}",
        "",
        "[boundary]",
        f"expr = @table:{names['boundary']}",
        f"periodic_y = {'true' if tspec.periodic_y else 'false'}",
        "",
        "[equation]",
        "class = L2",
        "",
    ]
    with open(args.emit, "w") as fh:
        fh.write("\n".join(lines))
    manifest = {
        "tool_version": __version__,
        "source_hash": pf.spec_hash,
        "xi_range": list(tc.xi_range),
        "tables": names,
    }
    with open(os.path.join(base, f"{stem}_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s and %d coefficient tables", args.emit, len(names))
    return 0


def _cmd_probe(args) -> int:
    traj, manifest = read_trajectory(args.traj)
    cfg = ProbeConfig(theta=args.theta, radii=args.radii, p=args.p)
    report = probe_trajectory(traj, args.center, cfg)
    payload = report.as_dict()
    payload["tool_version"] = __version__
    payload["spec_hash"] = manifest.get("spec_hash", "")
    _emit_json(payload, args.out)

    base = args.out or os.path.join(args.traj, "probe.json")
    stem = os.path.splitext(base)[0]
    csv_path = stem + "_osc.csv"
    with open(csv_path, "w") as fh:
        fh.write("r,osc,ratio\n")
        for row in report.oscillation_rows:
            if "ratio" in row:
                fh.write(f"{row['r']!r},{row['osc_outer']!r},{row['ratio']!r}\n")
            else:
                fh.write(f"{row['r']!r},nan,nan\n")
    log.info("wrote %s", csv_path)
    if not args.no_plot:
        from .plots import plot_oscillation_fit

        png_path = stem + "_osc.png"
        plot_oscillation_fit(payload, png_path)
        log.info("wrote %s", png_path)
    return 0


def _cmd_potential(args) -> int:
    from .potentials import (
        convolve,
        gain_ratio,
        gamma_dx_kernel,
        gamma_kernel,
        lp_norm,
        paired_exponent,
    )

    f = read_field_csv(args.input)
    kern = gamma_kernel() if args.kernel == "gamma" else gamma_dx_kernel()
    q = paired_exponent(kern, args.p)
    out_field = convolve(kern, f)
    if args.out:
        write_field_csv(out_field, args.out)
        log.info("wrote %s", args.out)
    ratio = lp_norm(out_field, q) / lp_norm(f, args.p)
    _emit_json(
        {
            "tool_version": __version__,
            "kernel": kern.name,
            "p": args.p,
            "q": q,
            "input_norm": lp_norm(f, args.p),
            "output_norm": lp_norm(out_field, q),
            "gain_ratio": ratio,
        },
        None,
    )
    return 0


def _cmd_verify(args) -> int:
    report = run_verify(args.seed)
    _emit_json(report, args.out)
    for s in report["suites"]:
        log.info("%s %s", "PASS" if s["passed"] else "FAIL", s["name"])
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="kolmo: %(message)s"
    )
    import warnings

    warnings.filterwarnings("ignore", category=AnisotropyAdvisory)
    ap = build_parser()
    args = ap.parse_args(argv)
    handlers = {
        "gamma": _cmd_gamma,
        "solve": _cmd_solve,
        "transform": _cmd_transform,
        "probe": _cmd_probe,
        "potential": _cmd_potential,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ProblemFileError, ParseError, EvalError, SolverError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
