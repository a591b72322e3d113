"""Command-line entry point: ``betakde <subcommand> ...``.

Exit status is 2 for usage or input errors, 1 when the quadrature
refinement gate fails, and 0 otherwise.
"""

import argparse
import hashlib
import json
import sys

import numpy as np

from .. import __version__
from ..densities import density_from_spec
from ..estimator import BetaKernelDensity
from ..exceptions import QuadratureConvergenceError
from ..kernel import BetaKernel
from ..quadrature import Quadrature
from ..risk import mc_risk
from .config import TAGS, ExperimentConfig
from .experiments import run_experiment
from .plot import render_svg
from .report import format_value, render_csv


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _build_parser():
    p = _Parser(prog="betakde", description="Beta kernel density estimation and risk experiments.")
    p.add_argument("--version", action="version", version=f"betakde {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("kernel-eval", help="evaluate K_{t,b} at points x")
    k.add_argument("--t", type=float, required=True)
    k.add_argument("--b", type=float, required=True)
    k.add_argument("--x", type=float, nargs="+", required=True)

    e = sub.add_parser("estimate", help="fit a sample file and evaluate on a uniform grid")
    e.add_argument("--input", required=True, help="text file, one value in [0, 1] per line")
    e.add_argument("--b", type=float, required=True)
    e.add_argument("--grid", type=int, default=2001, help="number of grid points on [0, 1]")
    e.add_argument("--out", help="CSV path (stdout when omitted)")

    r = sub.add_parser("risk", help="Monte Carlo L^p risk")
    r.add_argument("--density", required=True, help="uniform | linear | cosine:a=.. | sawtooth:beta=..,L=..")
    r.add_argument("--b", type=float, required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--p", type=float, default=2.0)
    r.add_argument("--reps", type=int, default=200)
    r.add_argument("--seed", type=_seed, default=0)
    r.add_argument("--panels", type=int, default=None)
    r.add_argument("--out", help="CSV path (stdout when omitted)")

    x = sub.add_parser("experiment", help="run a configured experiment")
    x.add_argument("tag", choices=TAGS)
    x.add_argument("--config", required=True, help="JSON config file")
    x.add_argument("--out", required=True, help="output directory")

    g = sub.add_parser("plot", help="log-log SVG of a report CSV")
    g.add_argument("--in", dest="inp", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--x", default=None)
    g.add_argument("--y", default=None)
    return p


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return {
        "version": __version__,
        "seed": config.get("seed", "none"),
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "config": blob,
    }


def _read_sample(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    values = []
    for i, line in enumerate(raw.decode("utf-8").splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        try:
            v = float(s)
        except ValueError:
            raise ValueError(f"{path}:{i}: not a number: {s!r}") from None
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{path}:{i}: value {v!r} outside [0, 1]")
        values.append(v)
    if not values:
        raise ValueError(f"{path}: sample is empty")
    return np.array(values), hashlib.sha256(raw).hexdigest()


def _cmd_kernel_eval(a):
    vals = BetaKernel(a.t, a.b).evaluate(np.array(a.x))
    for v in np.atleast_1d(vals):
        print(f"{float(v):.15g}")


def _cmd_estimate(a):
    if a.grid < 1:
        raise ValueError("--grid must be >= 1")
    x, digest = _read_sample(a.input)
    grid = np.linspace(0.0, 1.0, a.grid)
    fh = BetaKernelDensity(bandwidth=a.b).fit(x).evaluate_grid(grid)
    config = {"command": "estimate", "b": a.b, "grid": a.grid, "n": int(x.size), "input_sha256": digest}
    _emit(render_csv(("t", "density"), zip(grid, fh), _meta(config)), a.out)


def _cmd_risk(a):
    d = density_from_spec(a.density, b=a.b)
    q = None if a.panels is None else Quadrature(panels=a.panels, boundary_scale=a.b)
    est = mc_risk(d, a.b, a.n, a.p, a.reps, a.seed, q=q)
    config = {
        "command": "risk", "density": a.density, "b": a.b, "n": a.n, "p": a.p,
        "reps": a.reps, "seed": a.seed, "panels": a.panels,
    }
    row = (d.spec, a.b, a.n, a.p, a.reps, est.value, est.stderr)
    _emit(render_csv(("density", "b", "n", "p", "reps", "risk", "stderr"), [row], _meta(config)), a.out)


def _cmd_experiment(a):
    cfg = ExperimentConfig.load(a.config)
    if cfg.tag != a.tag:
        raise _UsageError(f"config is for {cfg.tag!r}, not {a.tag!r}")
    report = run_experiment(cfg)
    paths = report.write(a.out)
    if report.slope is not None:
        print(f"slope {format_value(report.slope)} (stderr {format_value(report.slope_stderr)}, r^2 {format_value(report.r_squared)})")
    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    for p in paths:
        print(f"wrote {p}")


def _cmd_plot(a):
    with open(a.inp, encoding="utf-8") as fh:
        svg = render_svg(fh.read(), a.x, a.y)
    _emit(svg, a.out)


_COMMANDS = {
    "kernel-eval": _cmd_kernel_eval,
    "estimate": _cmd_estimate,
    "risk": _cmd_risk,
    "experiment": _cmd_experiment,
    "plot": _cmd_plot,
}


def main(argv=None):
    """Run the CLI and return its exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except QuadratureConvergenceError as exc:
        print(f"betakde: numerical gate failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"betakde: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
