"""Command line front end: solve, estimate, sweep, verify.

Every run writes a JSON report that embeds the fully resolved
configuration, so a report is reproducible from itself.  Outputs are
deterministic: rerunning the same command yields bit-identical files.

Exit codes: 0 success (and, for verify, every adjudicated claim passed),
1 compute-level failure (unconverged solve or a failed claim), 2 usage or
validation error.

A JSON config file can supply any flag value (keys named like the flags,
without dashes); explicit flags win over the file.  The environment
variable PLAPREG_THREADS caps how many sweep cells run concurrently.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .fields import Grid, ScalarField, VectorField, read_field_csv, read_grid_json
from .pointwise import PLapParams
from .smoothness import (
    dyadic_shifts,
    fit_smoothness_exponent,
    nikolskii_seminorm,
    write_seminorm_report,
)
from .solver import ProblemSpec, SolverError, solve, write_solve_result
from .experiments import (
    DEFAULT_DELTA_EXPONENTS,
    DEFAULT_DELTA_SWEEP,
    DEFAULT_EPS_SWEEP,
    DEFAULT_NODES_1D,
    SharpnessOracle,
    oracle_fields,
    oracle_problem,
    run_eps_sweep,
    run_scaling_check,
    run_theorem1_check,
    write_scaling_report,
    write_sweep_result,
    write_theorem1_report,
)

__all__ = ["main", "entry"]

_SUITES = ("theorem1", "eps-uniform", "scaling")
_ORACLES = ("sharp", "torsion")


def _worker_count() -> int:
    raw = os.environ.get("PLAPREG_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n >= 1:
        return n
    return min(4, os.cpu_count() or 1)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plapreg",
        description="Regularized p-Laplace minimization and smoothness estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, *, eps_default=None):
        sp.add_argument("--config", type=str, default=None,
                        help="JSON file with default flag values")
        sp.add_argument("--p", type=float, default=None, help="growth exponent, p >= 2")
        sp.add_argument("--eps", type=str, default=eps_default,
                        help="regularization (sweep: comma-separated list)")
        sp.add_argument("--s", type=float, default=None, help="transform power s")
        sp.add_argument("--theta", type=float, default=None, help="smoothness exponent")
        sp.add_argument("--q", type=float, default=None, help="integrability exponent")
        sp.add_argument("--nodes", type=int, default=None, help="nodes per axis")
        sp.add_argument("--delta", type=float, default=None, help="interior margin")
        sp.add_argument("--oracle", type=str, default=None, choices=_ORACLES,
                        help="built-in problem: sharp (kinked profile) or torsion (f=1, g=0)")
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--mode", type=str, default=None,
                        choices=("auto", "thm2", "thm3"), help="parameter-regime check")

    sp = sub.add_parser("solve", help="minimize the energy for a built-in problem")
    common(sp)

    sp = sub.add_parser("estimate", help="difference-quotient smoothness report")
    common(sp)
    sp.add_argument("--field", type=str, default=None, help="field CSV to analyze")
    sp.add_argument("--grid", type=str, default=None, help="grid JSON for --field")

    sp = sub.add_parser("sweep", help="solve across an eps list, track norms")
    common(sp)

    sp = sub.add_parser("verify", help="run a verification suite")
    common(sp)
    sp.add_argument("--suite", type=str, default=None, choices=_SUITES)
    sp.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="scaling factor for the scaling suite")
    return parser


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the JSON config file, if one was given."""
    if getattr(args, "config", None) is None:
        return args
    payload = json.loads(Path(args.config).read_text())
    if not isinstance(payload, dict):
        raise ValueError("config file must contain a JSON object")
    alias = {"lambda": "lam"}
    for key, val in payload.items():
        dest = alias.get(key, key)
        if not hasattr(args, dest):
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, dest) is None:
            setattr(args, dest, val)
    return args


def _resolve(args, **defaults) -> dict:
    """Effective run configuration: flag if set, else the given default."""
    out = {}
    for key, default in defaults.items():
        val = getattr(args, key, None)
        out[key] = default if val is None else val
    return out


def _eps_list(raw) -> tuple:
    if isinstance(raw, (list, tuple)):
        return tuple(float(e) for e in raw)
    return tuple(float(part) for part in str(raw).split(",") if part.strip())


def _problem(name: str, p: float, eps: float, nodes: int, s=None) -> ProblemSpec:
    grid = Grid.line(-1.0, 1.0, nodes)
    if name == "sharp":
        return oracle_problem(SharpnessOracle(p=p), grid, eps, s=s)
    params = PLapParams(p=p, eps=eps, s=p / 2.0 if s is None else s, theta=2.0 / p)
    return ProblemSpec(grid, params, ScalarField.constant(grid, 1.0),
                       ScalarField.constant(grid, 0.0))


def _write_report(outdir: Path, payload: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n"
    )


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise _UsageError(message)


class _UsageError(ValueError):
    pass


def _cmd_solve(args) -> int:
    _require(args.p is not None, "solve requires --p")
    cfg = _resolve(args, p=None, eps="1e-3", s=None, nodes=DEFAULT_NODES_1D,
                   oracle="sharp", out="plapreg-out", mode="auto")
    eps = float(cfg["eps"])
    _require(eps > 0.0, "solve requires eps > 0")
    s = cfg["s"] if cfg["s"] is not None else cfg["p"] / 2.0
    PLapParams(p=cfg["p"], eps=eps, s=s).require_mode(cfg["mode"])
    spec = _problem(cfg["oracle"], cfg["p"], eps, cfg["nodes"], s=s)
    outdir = Path(cfg["out"])
    result = solve(spec)
    summary = write_solve_result(result, spec, outdir)
    cfg["s"] = spec.params.s
    _write_report(outdir, {"command": "solve", "config": _jsonable(cfg),
                           "result": summary})
    return 0 if result.converged else 1


def _estimate_field(args, cfg):
    if args.field is not None:
        _require(args.grid is not None, "--field requires --grid")
        grid = read_grid_json(args.grid)
        cfg["field"] = args.field
        cfg["grid"] = args.grid
        return read_field_csv(args.field, grid)
    _require(cfg["p"] is not None, "estimate requires --p with --oracle")
    oracle = SharpnessOracle(p=cfg["p"])
    grid = Grid.line(-1.0, 1.0, cfg["nodes"])
    _, grad, _ = oracle_fields(oracle, grid)
    return grad


def _cmd_estimate(args) -> int:
    cfg = _resolve(args, p=None, q=2.0, theta=None, nodes=DEFAULT_NODES_1D,
                   delta=DEFAULT_DELTA_EXPONENTS, oracle="sharp", out="plapreg-out")
    _require(cfg["q"] >= 1.0, "estimate requires q >= 1")
    field = _estimate_field(args, cfg)
    shifts = dyadic_shifts(field.grid, cfg["delta"])
    report = fit_smoothness_exponent(field, cfg["q"], shifts)
    outdir = Path(cfg["out"])
    write_seminorm_report(report, outdir)
    payload = {"command": "estimate", "config": _jsonable(cfg),
               "report": report.to_dict()}
    if cfg["theta"] is not None:
        payload["seminorm_at_theta"] = nikolskii_seminorm(
            field, cfg["q"], cfg["theta"], shifts
        )
    _write_report(outdir, payload)
    return 0


def _cmd_sweep(args) -> int:
    _require(args.p is not None, "sweep requires --p")
    cfg = _resolve(args, p=None, eps=DEFAULT_EPS_SWEEP, s=None,
                   nodes=DEFAULT_NODES_1D, delta=DEFAULT_DELTA_SWEEP,
                   oracle="sharp", out="plapreg-out")
    eps_values = _eps_list(cfg["eps"])
    _require(bool(eps_values) and min(eps_values) > 0.0,
             "sweep requires positive eps values")
    cfg["eps"] = list(eps_values)
    s = cfg["s"] if cfg["s"] is not None else cfg["p"] / 2.0
    cfg["s"] = s
    template = _problem(cfg["oracle"], cfg["p"], eps_values[0], cfg["nodes"], s=s)
    result = run_eps_sweep(template, s, eps_values, cfg["delta"],
                           workers=_worker_count())
    outdir = Path(cfg["out"])
    write_sweep_result(result, outdir)
    _write_report(outdir, {"command": "sweep", "config": _jsonable(cfg),
                           "result": result.to_dict()})
    return 0 if result.verdict in ("pass", "outside-theorem") else 1


def _cmd_verify(args) -> int:
    _require(args.suite is not None, "verify requires --suite")
    suite = args.suite
    outdir = None
    if suite == "theorem1":
        cfg = _resolve(args, p=4.0, nodes=DEFAULT_NODES_1D,
                       delta=DEFAULT_DELTA_EXPONENTS, out="plapreg-out")
        report = run_theorem1_check(cfg["p"], nodes=cfg["nodes"], delta=cfg["delta"],
                                    negative_control=True)
        outdir = Path(cfg["out"])
        write_theorem1_report(report, outdir)
        _write_report(outdir, {"command": "verify", "suite": suite,
                               "config": _jsonable(cfg), "result": report.to_dict()})
        return 0 if report.passed else 1
    if suite == "eps-uniform":
        cfg = _resolve(args, p=3.0, s=None, eps=DEFAULT_EPS_SWEEP,
                       nodes=DEFAULT_NODES_1D, delta=DEFAULT_DELTA_SWEEP,
                       oracle="sharp", out="plapreg-out")
        s = cfg["s"] if cfg["s"] is not None else cfg["p"] / 2.0
        cfg["s"] = s
        eps_values = _eps_list(cfg["eps"])
        cfg["eps"] = list(eps_values)
        template = _problem(cfg["oracle"], cfg["p"], eps_values[0], cfg["nodes"], s=s)
        result = run_eps_sweep(template, s, eps_values, cfg["delta"],
                               workers=_worker_count())
        outdir = Path(cfg["out"])
        write_sweep_result(result, outdir)
        _write_report(outdir, {"command": "verify", "suite": suite,
                               "config": _jsonable(cfg), "result": result.to_dict()})
        return 0 if result.verdict in ("pass", "outside-theorem") else 1
    # scaling
    cfg = _resolve(args, p=3.0, eps="1e-3", s=None, lam=0.5, nodes=1025,
                   oracle="sharp", out="plapreg-out")
    _require(cfg["lam"] > 0.0, "scaling requires --lambda > 0")
    s = cfg["s"] if cfg["s"] is not None else cfg["p"] / 2.0
    cfg["s"] = s
    spec = _problem(cfg["oracle"], cfg["p"], float(cfg["eps"]), cfg["nodes"], s=s)
    report = run_scaling_check(spec, cfg["lam"])
    outdir = Path(cfg["out"])
    write_scaling_report(report, outdir)
    _write_report(outdir, {"command": "verify", "suite": suite,
                           "config": _jsonable(cfg), "result": report.to_dict()})
    return 0 if report.passed else 1


def _jsonable(cfg: dict) -> dict:
    out = {}
    for key, val in cfg.items():
        if isinstance(val, (np.floating, np.integer)):
            val = val.item()
        out[key] = val
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        args = _apply_config(args)
        handler = {
            "solve": _cmd_solve,
            "estimate": _cmd_estimate,
            "sweep": _cmd_sweep,
            "verify": _cmd_verify,
        }[args.command]
        return handler(args)
    except (_UsageError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
