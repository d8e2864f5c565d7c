"""Command-line entry point.

Subcommands::

    templelab list-systems
    templelab check --system rotated2
    templelab solve --config run.json
    templelab solve --system burgers --grid -2 2 400 --epsilon 0.01 --t-end 0.5 --left 1 --right 0
    templelab riemann --system rotated2 --left 0.1,0.1 --right -0.1,0.05
    templelab study vanishing-viscosity [--config run.json]

Artifacts go to ``--output``, else the config's ``output_dir``, else
``$TEMPLELAB_OUTPUT/<run>``, else ``./templelab-output/<run>``. Exit codes:
0 success, 1 failed assertion, 2 configuration error, 3 numerical abort. On
codes 2 and 3 an ``error.json`` record is written when an output directory is
known and the same record is printed to stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import RunConfig, build_field, load_config, parse_config
from .designated import DESIGNATED, STUDIES, resolve_run, run_study
from .errors import ConfigError, NumericalAbort, TempleLabError
from .grid import diagnostics, write_field_csv
from .report import SCHEMA_VERSION, dumps, fmt, write_csv, write_json
from .riemann import solve_riemann
from .system import check_system, lattice_samples
from .systems import get_system, system_names
from .viscous import solve_viscous

OUTPUT_ENV = "TEMPLELAB_OUTPUT"
VERSION = "0.1.0"


def output_dir(explicit: Optional[str], cfg_dir: Optional[str], run: str) -> Path:
    if explicit:
        return Path(explicit)
    if cfg_dir:
        return Path(cfg_dir)
    root = os.environ.get(OUTPUT_ENV)
    return Path(root or "templelab-output") / run


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(out: Path, command: str, config: dict, files: List[str], **extra) -> None:
    body = {
        "command": command,
        "version": VERSION,
        "config": config,
        "files": {name: _digest(out / name) for name in sorted(files)},
    }
    body.update(extra)
    write_json(out / "manifest.json", body)


def _vector(text: str, n: int, what: str) -> List[float]:
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    if len(vals) != n:
        raise ConfigError(f"{what}: expected {n} comma-separated numbers, got {len(vals)}")
    return vals


# ---------------------------------------------------------------------------
# commands


def cmd_list_systems(args) -> int:
    for name in system_names():
        spec = get_system(name)
        kind = "constant frame" if spec.constant_frame else "state-dependent frame"
        print(f"{name:10s} n={spec.n}  {kind}")
    return 0


def cmd_check(args) -> int:
    spec = get_system(args.system)
    reports = check_system(spec, lattice_samples(spec, args.samples))
    hyp = reports["hypotheses"].scalars
    rows = [(k[len("pass_"):], v) for k, v in sorted(hyp.items()) if k.startswith("pass_")]
    rows.append(("temple", reports["temple"].passed))
    width = max(len(name) for name, _ in rows)
    print(f"system {spec.name} (n={spec.n}, {hyp['samples']} samples)")
    for name, ok in rows:
        print(f"  {name:<{width}s}  {'PASS' if ok else 'FAIL'}")
    print(f"  temple residual {reports['temple'].scalars['max_residual']:.3e}"
          f" (threshold {reports['temple'].threshold['max_residual']:.1e})")
    passed = all(r.passed for r in reports.values())
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", {"system": spec.name, "pass": passed,
                                         "checks": {k: r.to_dict() for k, r in reports.items()}})
    return 0 if passed else 1


def _solve_config(args) -> RunConfig:
    if args.config:
        return load_config(args.config)
    if not args.system or args.grid is None or args.epsilon is None or args.t_end is None:
        raise ConfigError("solve needs --config or all of --system, --grid, --epsilon, --t-end")
    spec = get_system(args.system)
    if args.state is not None:
        initial = {"base": _vector(args.state, spec.n, "--state")}
    elif args.left is not None and args.right is not None:
        initial = {"pieces": {"breaks": [args.at], "states": [
            _vector(args.left, spec.n, "--left"), _vector(args.right, spec.n, "--right")]}}
    else:
        raise ConfigError("give --state or both --left and --right")
    solve = {"epsilon": args.epsilon, "t_end": args.t_end}
    if args.record_times:
        solve["record_times"] = args.record_times
    return parse_config({
        "system": args.system,
        "grid": {"x_min": args.grid[0], "x_max": args.grid[1], "cells": int(args.grid[2])},
        "solve": solve, "initial": initial, "seed": args.seed,
    }, Path.cwd())


def cmd_solve(args) -> int:
    cfg = _solve_config(args)
    args.resolved_output = out = output_dir(args.output, cfg.output_dir, "solve")
    spec = cfg.system_spec()
    scfg = cfg.solve_config()
    u0 = build_field(spec, cfg.initial, cfg.grid, cfg.seed)
    info: dict = {}
    fields = solve_viscous(spec, u0, scfg, info)
    out.mkdir(parents=True, exist_ok=True)
    files = ["initial.csv"]
    write_field_csv(out / "initial.csv", u0)
    records = []
    for k, f in enumerate(fields):
        name = f"fields_{k:03d}.csv"
        write_field_csv(out / name, f)
        files.append(name)
        records.append({"t": f.t, "file": name, "diagnostics": diagnostics(f).scalars})
    write_json(out / "report.json", {"name": "solve", "steps": info.get("steps"),
                                     "scheme": info.get("scheme"), "records": records,
                                     "config": cfg.to_dict()})
    files.append("report.json")
    _manifest(out, "solve", cfg.to_dict(), files, record_times=list(scfg.record_times))
    print(f"solved to t = {scfg.t_end:g} in {info.get('steps')} steps; wrote {out}")
    return 0


def cmd_riemann(args) -> int:
    spec = get_system(args.system)
    u_l = np.array(_vector(args.left, spec.n, "--left"))
    u_r = np.array(_vector(args.right, spec.n, "--right"))
    config = {"system": args.system, "left": u_l.tolist(), "right": u_r.tolist(),
              "samples": args.samples}
    args.resolved_output = out = output_dir(args.output, None, "riemann")
    fan = solve_riemann(spec, u_l, u_r)
    span = fan.span
    if args.xi_range is not None:
        lo, hi = args.xi_range
    elif span is None:
        lo, hi = -1.0, 1.0
    else:
        pad = max(0.25 * (span[1] - span[0]), 0.1)
        lo, hi = span[0] - pad, span[1] + pad
    config["xi_range"] = [lo, hi]
    xi = np.linspace(lo, hi, args.samples)
    U = fan.sample(1.0, xi).reshape(xi.size, spec.n)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "fan.csv", ["xi"] + [f"u_{i + 1}" for i in range(spec.n)],
              [xi] + [U[:, i] for i in range(spec.n)])
    body = fan.to_dict()
    body["system"] = spec.name
    body["config"] = config
    write_json(out / "fan.json", body)
    _manifest(out, "riemann", config, ["fan.csv", "fan.json"])
    active = [f["family"] for f in body["families"] if f["sigma"] != 0.0]
    print(f"sigma = [{', '.join(fmt(s) for s in fan.sigma)}]; active families {active}; wrote {out}")
    return 0


def cmd_study(args) -> int:
    cfg = load_config(args.config) if args.config else resolve_run(args.name)
    if cfg.study is None:
        raise ConfigError("configuration has no 'study' section")
    if args.config and args.name not in (cfg.study.name, "run"):
        raise ConfigError(f"config describes study '{cfg.study.name}', not '{args.name}'")
    run_name = args.name if args.name in DESIGNATED else cfg.study.name
    args.resolved_output = out = output_dir(args.output, cfg.output_dir, run_name)
    report = run_study(cfg)
    report.write(out)
    _manifest(out, "study", cfg.to_dict(), ["report.json", "series.csv"], study=cfg.study.name)
    status = "PASS" if report.passed else "FAIL"
    summary = ""
    if report.fit:
        keys = [k for k in ("p", "exponent", "a", "b", "residual") if k in report.fit]
        if "p" in keys:
            keys.remove("exponent")
        summary = " ".join(f"{k}={report.fit[k]:.4g}" for k in keys
                           if isinstance(report.fit[k], (int, float)))
    print(f"{status} {run_name} {summary}".rstrip() + f"; wrote {out}")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="templelab",
                                     description="Viscous Temple systems laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-systems", help="list bundled systems")
    p.set_defaults(func=cmd_list_systems)

    p = sub.add_parser("check", help="check hyperbolicity, commutation and Temple structure")
    p.add_argument("--system", required=True, help="bundled name or .sys file")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--output", help="write report.json here")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="run the viscous solver")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--system")
    p.add_argument("--grid", nargs=3, type=float, metavar=("X_MIN", "X_MAX", "CELLS"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--record-times", type=float, nargs="+")
    p.add_argument("--state", help="constant state, comma separated")
    p.add_argument("--left", help="left state of a jump")
    p.add_argument("--right", help="right state of a jump")
    p.add_argument("--at", type=float, default=0.0, help="jump position")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("riemann", help="solve a Riemann problem exactly")
    p.add_argument("--system", required=True)
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--samples", type=int, default=401, help="xi samples in fan.csv")
    p.add_argument("--xi-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--output")
    p.set_defaults(func=cmd_riemann)

    p = sub.add_parser("study", help="run an estimate study",
                       epilog=f"studies: {', '.join(sorted(STUDIES))}; "
                              f"designated runs: {', '.join(sorted(DESIGNATED))}")
    p.add_argument("name", help="study name (uses its default run) or designated run name")
    p.add_argument("--config", help="JSON run configuration with a study section")
    p.add_argument("--output")
    p.set_defaults(func=cmd_study)
    return parser


def _error_record(args, exc: Exception, code: int) -> None:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code,
              "command": getattr(args, "command", None), "schema_version": SCHEMA_VERSION}
    sys.stderr.write(dumps(record))
    out = getattr(args, "resolved_output", None) or getattr(args, "output", None)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_json(Path(out) / "error.json", record)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _error_record(args, exc, 2)
        return 2
    except NumericalAbort as exc:
        _error_record(args, exc, 3)
        return 3
    except TempleLabError as exc:
        # remaining package errors (no reference, grid mismatch, ...) are setup problems
        _error_record(args, exc, 2)
        return 2


if __name__ == "__main__":
    sys.exit(main())
