"""Problem files: parsing, validation, and the content hash stamped on outputs.

A problem file is an INI-style text file with the sections

    [coefficients]  a, b0, b as expression strings plus mu
    [grid]          x, y ranges, nx, ny, optional dt cap, t window
    [initial]       expr
    [boundary]      expr, optional periodic_y
    [equation]      class (optional, default L_general)
    [probe]         center, radii, theta, p (optional section)
    [output]        dir, checkpoint_every (optional section)

Unknown sections or keys are errors, so typos fail loudly.  Coefficient
entries may reference sampled tables as `@table:file.csv` (written by the
transform subcommand); table files hold x,y,t,value rows on a regular grid
and evaluate by trilinear interpolation.  All paths are relative to the
problem file.  A stable content hash of the parsed key-value pairs is
embedded in every derived output for provenance.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .dsl import CoefficientSet, parse
from .fields import Field, Grid, SpaceTimeField, Trajectory
from .group import Point
from .probe import ProbeConfig
from .solver import ProblemSpec

__all__ = [
    "ProblemFile",
    "ProblemFileError",
    "load_problem",
    "load_table",
    "write_trajectory",
    "read_trajectory",
    "write_field_csv",
    "read_field_csv",
]


class ProblemFileError(ValueError):
    pass


_SCHEMA = {
    "coefficients": {"a", "b0", "b", "mu"},
    "grid": {"x", "y", "nx", "ny", "dt", "t"},
    "initial": {"expr"},
    "boundary": {"expr", "periodic_y"},
    "equation": {"class"},
    "probe": {"center", "radii", "theta", "p"},
    "output": {"dir", "checkpoint_every"},
}
_REQUIRED = ("coefficients", "grid", "initial", "boundary")


def _pair(text: str, what: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ProblemFileError(f"{what} needs two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


@dataclass
class ProblemFile:
    """Parsed problem file plus the content hash used for provenance."""

    coefficients: CoefficientSet
    grid: Grid
    initial: object
    boundary: object
    periodic_y: bool
    equation_class: str
    spec_hash: str
    probe: Optional[ProbeConfig] = None
    probe_center: Optional[Point] = None
    output_dir: Optional[str] = None
    checkpoint_every: int = 1
    base_dir: str = "."

    def to_problem_spec(self, validate_coefficients: bool = True) -> ProblemSpec:
        return ProblemSpec(
            self.grid,
            self.coefficients,
            self.initial,
            self.boundary,
            self.equation_class,
            periodic_y=self.periodic_y,
            checkpoint_every=self.checkpoint_every,
            validate_coefficients=validate_coefficients,
        )


def _content_hash(cfg: configparser.ConfigParser) -> str:
    lines = []
    for section in sorted(cfg.sections()):
        for key in sorted(cfg[section]):
            lines.append(f"{section}.{key}={cfg[section][key].strip()}")
    digest = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    return digest[:16]


def _coefficient(entry: str, base_dir: str):
    entry = entry.strip()
    if entry.startswith("@table:"):
        path = os.path.join(base_dir, entry[len("@table:"):].strip())
        return load_table(path)
    return parse(entry)


def load_problem(path: str) -> ProblemFile:
    """Parse and validate a problem file; unknown keys are hard errors."""
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cfg.optionxform = str
    read = cfg.read(path)
    if not read:
        raise ProblemFileError(f"cannot read problem file {path!r}")
    base_dir = os.path.dirname(os.path.abspath(path))

    for section in cfg.sections():
        if section not in _SCHEMA:
            raise ProblemFileError(f"unknown section [{section}] in {path}")
        for key in cfg[section]:
            if key not in _SCHEMA[section]:
                raise ProblemFileError(
                    f"unknown key {key!r} in section [{section}] of {path}"
                )
    for section in _REQUIRED:
        if section not in cfg:
            raise ProblemFileError(f"missing required section [{section}] in {path}")

    co = cfg["coefficients"]
    for key in ("a", "b0", "b", "mu"):
        if key not in co:
            raise ProblemFileError(f"missing coefficients.{key} in {path}")
    cs = CoefficientSet(
        a=_coefficient(co["a"], base_dir),
        b0=_coefficient(co["b0"], base_dir),
        b=_coefficient(co["b"], base_dir),
        mu=float(co["mu"]),
    )

    gr = cfg["grid"]
    for key in ("x", "y", "nx", "ny", "t"):
        if key not in gr:
            raise ProblemFileError(f"missing grid.{key} in {path}")
    xlo, xhi = _pair(gr["x"], "grid.x")
    ylo, yhi = _pair(gr["y"], "grid.y")
    t0, t1 = _pair(gr["t"], "grid.t")
    dt = float(gr["dt"]) if "dt" in gr else (t1 - t0)
    grid = Grid(xlo, xhi, ylo, yhi, int(gr["nx"]), int(gr["ny"]), dt, t0, t1)

    if "expr" not in cfg["initial"]:
        raise ProblemFileError(f"missing initial.expr in {path}")
    initial = parse(cfg["initial"]["expr"])
    if "expr" not in cfg["boundary"]:
        raise ProblemFileError(f"missing boundary.expr in {path}")
    boundary = parse(cfg["boundary"]["expr"])
    periodic_y = cfg["boundary"].getboolean("periodic_y", fallback=False)

    eq_class = "L_general"
    if "equation" in cfg and "class" in cfg["equation"]:
        eq_class = cfg["equation"]["class"].strip()

    probe_cfg = None
    probe_center = None
    if "probe" in cfg:
        pr = cfg["probe"]
        radii = _floats(pr.get("radii", "0.4, 0.2, 0.1"))
        theta = float(pr.get("theta", "0.125"))
        p = float(pr.get("p", "2"))
        probe_cfg = ProbeConfig(theta=theta, radii=radii, p=p)
        cx, cy, ct = _floats(pr.get("center", "0, 0, 0"))
        probe_center = Point(cx, cy, ct)

    output_dir = None
    checkpoint_every = 1
    if "output" in cfg:
        out = cfg["output"]
        if "dir" in out:
            output_dir = os.path.join(base_dir, out["dir"])
        checkpoint_every = int(out.get("checkpoint_every", "1"))

    return ProblemFile(
        coefficients=cs,
        grid=grid,
        initial=initial,
        boundary=boundary,
        periodic_y=periodic_y,
        equation_class=eq_class,
        spec_hash=_content_hash(cfg),
        probe=probe_cfg,
        probe_center=probe_center,
        output_dir=output_dir,
        checkpoint_every=checkpoint_every,
        base_dir=base_dir,
    )


# --------------------------------------------------------------------------
# Tabulated coefficients and field/trajectory IO


class _Table:
    """Trilinear-interpolating coefficient backed by a sampled grid."""

    def __init__(self, field: SpaceTimeField, path: str):
        self.field = field
        self.path = path

    def __call__(self, x, y, t):
        return self.field.sample(x, y, t)


def load_table(path: str) -> _Table:
    return _Table(read_field_csv(path), path)


def write_field_csv(f: SpaceTimeField, path: str):
    """x,y,t,value rows in fixed lexicographic cell order."""
    X, Y, T = f.meshgrid()
    data = np.column_stack(
        [X.ravel(), Y.ravel(), T.ravel(), f.values.ravel()]
    )
    with open(path, "w") as fh:
        fh.write("x,y,t,value\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def read_field_csv(path: str) -> SpaceTimeField:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] != 4:
        raise ProblemFileError(f"expected x,y,t,value columns in {path}")
    xs = np.unique(raw[:, 0])
    ys = np.unique(raw[:, 1])
    ts = np.unique(raw[:, 2])
    if len(xs) * len(ys) * len(ts) != raw.shape[0]:
        raise ProblemFileError(f"{path} is not a full regular grid")
    order = np.lexsort((raw[:, 2], raw[:, 1], raw[:, 0]))
    vals = raw[order, 3].reshape(len(xs), len(ys), len(ts))
    return SpaceTimeField(xs, ys, ts, vals)


def write_trajectory(traj: Trajectory, out_dir: str, spec_hash: str = ""):
    """One x,y,value CSV per time level plus a JSON manifest."""
    os.makedirs(out_dir, exist_ok=True)
    g = traj.grid
    X, Y = g.meshgrid()
    names = []
    for k, t in enumerate(traj.times):
        name = f"level_{k:06d}.csv"
        names.append(name)
        data = np.column_stack([X.ravel(), Y.ravel(), traj.values[k].ravel()])
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write("x,y,value\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")
    manifest = {
        "tool_version": __version__,
        "spec_hash": spec_hash,
        "grid": {
            "x": [g.xlo, g.xhi],
            "y": [g.ylo, g.yhi],
            "nx": g.nx,
            "ny": g.ny,
            "t0": g.t0,
            "t1": g.t1,
            "dt": g.dt,
        },
        "times": [float(t) for t in traj.times],
        "levels": names,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_trajectory(out_dir: str) -> tuple[Trajectory, dict]:
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    g = manifest["grid"]
    grid = Grid(
        g["x"][0], g["x"][1], g["y"][0], g["y"][1],
        g["nx"], g["ny"], g["dt"], g["t0"], g["t1"],
    )
    times = np.asarray(manifest["times"], dtype=float)
    values = np.empty((len(times), grid.nx, grid.ny))
    for k, name in enumerate(manifest["levels"]):
        raw = np.loadtxt(
            os.path.join(out_dir, name), delimiter=",", skiprows=1, ndmin=2
        )
        values[k] = raw[:, 2].reshape(grid.nx, grid.ny)
    return Trajectory(grid, times, values), manifest
