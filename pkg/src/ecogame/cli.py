"""``ecogame`` command line: simulate, classify, optimize, sensitivity, sweep.

Every command reads one JSON run configuration (``--config``, defaults to the
reference configuration) that ``--set KEY=VALUE`` flags override. Output goes
to stdout unless ``--out`` is given. Exit codes: 0 success, 2 configuration
error, 3 numerical failure, 4 boundary-policy refusal.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from typing import List, Optional, Sequence

import numpy as np

from .config import (
    RunConfig,
    apply_overrides,
    build_document,
    canonical_key,
    read_config_file,
    run_config_from_document,
)
from .dynamics import classify_trajectory, integrate_many, worker_count, write_trajectory_csv
from .equilibria import (
    classify_single_population,
    classify_two_population,
    enumerate_fixed_points,
    fixed_points_to_json,
)
from .errors import (
    AssumptionViolation,
    BoundaryPolicy,
    DegenerateDenominator,
    EcoGameError,
    InvalidParameter,
    NonFiniteState,
    OutOfRegion,
)
from .exploit import optimal_consumption, utility_curve
from .model import SystemConfig, validate
from .sensitivity import resource_sensitivities, sensitivity_ratio_map, write_grid_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BOUNDARY = 4

SWEEP_COLUMNS = ["regime", "x1_star", "n_star", "alpha2_star", "R_star", "U_star"]
IC_LOW, IC_HIGH = 0.05, 0.95


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _f(v) -> str:
    return "" if v is None else f"{v:.17g}"


def _dump(obj) -> str:
    # repr-based float output already round-trips exactly
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check(cfg: SystemConfig, args, single: Optional[int] = None) -> None:
    """Validate per --warn; --single-pop only checks that population's assumptions."""
    mode = "warn" if args.warn else "strict"
    report = validate(cfg, "warn")
    names = report.names
    if single is not None:
        prefix = f"pop{single} d_"
        names = [n for n in names if n.startswith(prefix) and "must be negative" not in n]
    if not names:
        return
    if mode == "strict":
        raise AssumptionViolation(names[0], names)
    for n in names:
        print(f"warning: assumption violated: {n}", file=sys.stderr)


def _parse_floats(text: str, n: int, what: str) -> List[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(f"{what} must be {n} comma-separated numbers, got {text!r}")
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise CliError(f"{what} must be {n} comma-separated finite numbers, got {text!r}")
    return vals


def parse_range(text: str, what: str = "range") -> np.ndarray:
    """``lo:hi:steps`` -> ``steps`` evenly spaced points including both ends."""
    parts = text.split(":")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise CliError(f"{what} must look like lo:hi:steps, got {text!r}")
    if len(parts) != 3 or steps < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise CliError(f"{what} must look like lo:hi:steps with steps >= 1, got {text!r}")
    if steps == 1:
        return np.array([lo])
    # lo + (hi - lo) * i / (steps - 1) lands exactly on round values such as 0.5
    i = np.arange(steps, dtype=float)
    return lo + (hi - lo) * i / (steps - 1)


def _regime_json(label) -> dict:
    out = {"regime": label.kind}
    for k in ("item", "x1_star", "x_star", "n_star", "n_max"):
        v = getattr(label, k, None)
        if v is not None:
            out[k] = v
    return out


# --------------------------------------------------------------------------
# simulate

def cmd_simulate(rc: RunConfig, args) -> int:
    cfg = rc.system
    _check(cfg, args)
    if args.random_ics is not None:
        if args.random_ics < 1:
            raise CliError("--random-ics must be >= 1")
        rng = np.random.default_rng(rc.seed)
        ics = rng.uniform(IC_LOW, IC_HIGH, size=(args.random_ics, 3)).tolist()
    else:
        ics = [_parse_floats(args.ic, 3, "--ic")]
        # faces are allowed so invariant-face runs can be reproduced
        if not all(0.0 <= v <= 1.0 for v in ics[0]):
            raise CliError("--ic must lie in the unit cube")

    try:
        predicted = _regime_json(classify_two_population(cfg))
    except (BoundaryPolicy, OutOfRegion) as exc:
        predicted = {"regime": "unclassified", "reason": str(exc)}

    trajs = integrate_many(cfg, ics, rc.integrator)
    if args.format == "csv" and not args.out:
        if len(trajs) != 1:
            raise CliError("--format csv on stdout needs a single trajectory; use --out DIR")
        buf = io.StringIO()
        write_trajectory_csv(trajs[0], buf)
        sys.stdout.write(buf.getvalue())
        return EXIT_OK

    runs = []
    for i, (ic, t) in enumerate(zip(ics, trajs)):
        label = classify_trajectory(t, cfg)
        run = {
            "index": i,
            "initial_state": ic,
            "outcome": label.kind,
            "n_final": label.n_final,
            "initial_condition_dependent": label.initial_condition_dependent,
            "final_state": t.states[-1].tolist(),
            "t_final": t.t_final,
            "terminal_reason": t.terminal_reason,
        }
        if args.out:
            name = f"traj_{i:03d}.csv"
            write_trajectory_csv(t, os.path.join(args.out, name))
            run["trajectory_file"] = name
        runs.append(run)
    summary = {"predicted": predicted, "seed": rc.seed, "runs": runs}
    text = _dump(summary)
    if args.out:
        _emit(text, os.path.join(args.out, "summary.json"))
    sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# classify

def cmd_classify(rc: RunConfig, args) -> int:
    cfg = rc.system
    if args.single_pop:
        _check(cfg, args, single=args.single_pop)
        pop = cfg.pop1 if args.single_pop == 1 else cfg.pop2
        report = _regime_json(classify_single_population(pop))
        report["population"] = args.single_pop
    else:
        _check(cfg, args)
        report = _regime_json(classify_two_population(cfg))
        report["fixed_points"] = fixed_points_to_json(enumerate_fixed_points(cfg))
    if args.format == "csv":
        raise CliError("classify only writes JSON")
    _emit(_dump(report), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# optimize

def _curve_csv(pop1) -> str:
    a2, R, U = utility_curve(pop1, pop1.theta + 0.25, 1e-3)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha2", "R", "U"])
    for row in zip(a2, R, U):
        w.writerow([_f(v) for v in row])
    return buf.getvalue()


def cmd_optimize(rc: RunConfig, args) -> int:
    cfg = rc.system
    _check(cfg, args)
    res = asdict(optimal_consumption(cfg.pop1))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _emit(_dump(res), os.path.join(args.out, "result.json"))
        _emit(_curve_csv(cfg.pop1), os.path.join(args.out, "utility_curve.csv"))
        sys.stdout.write(_dump(res))
    elif args.format == "csv":
        sys.stdout.write(_curve_csv(cfg.pop1))
    else:
        sys.stdout.write(_dump(res))
    return EXIT_OK


# --------------------------------------------------------------------------
# sensitivity

def cmd_sensitivity(rc: RunConfig, args) -> int:
    pop1 = rc.system.pop1
    if args.grid:
        specs = args.grid.split(",")
        if len(specs) != 2:
            raise CliError("--grid must be sp0_lo:sp0_hi:steps,rt0_lo:rt0_hi:steps")
        sp0 = parse_range(specs[0], "--grid d_sp0")
        rt0 = parse_range(specs[1], "--grid d_rt0")
        cells = sensitivity_ratio_map(pop1, sp0, rt0)
        if args.format == "json":
            rows = []
            for c in itertools.chain.from_iterable(cells):
                r = c.report
                rows.append({"d_sp0": c.d_sp0, "d_rt0": c.d_rt0, "region": c.region,
                             "dR_dsp0": r and r.dR_dsp0, "dR_drt0": r and r.dR_drt0,
                             "rho": c.rho})
            _emit(_dump(rows), args.out)
        else:
            buf = io.StringIO()
            write_grid_csv(cells, buf)
            _emit(buf.getvalue(), args.out)
        return EXIT_OK
    _check(rc.system, args, single=1)
    if args.format == "csv":
        raise CliError("single-policy sensitivity only writes JSON; pass --grid for CSV")
    _emit(_dump(asdict(resource_sensitivities(pop1))), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep

def _sweep_cell(doc: dict, assignment: Sequence) -> List[Optional[object]]:
    """One sweep row (without the varied columns); failures become labels."""
    overrides = [f"{k}={json.dumps(float(v))}" for k, v in assignment]
    try:
        cfg = run_config_from_document(apply_overrides(doc, overrides)).system
    except EcoGameError:
        return ["invalid"] + [None] * 5
    if not validate(cfg, "warn").ok:
        return ["infeasible"] + [None] * 5
    try:
        label = classify_two_population(cfg)
        regime, x1, n = label.kind, label.x1_star, label.n_star
    except BoundaryPolicy:
        regime, x1, n = "boundary", None, None
    except OutOfRegion:
        regime, x1, n = "out_of_region", None, None
    try:
        r = optimal_consumption(cfg.pop1)
        opt = [r.alpha2_star, r.resource, r.utility]
    except OutOfRegion:
        opt = [None] * 3
    return [regime, x1, n] + opt


def cmd_sweep(rc: RunConfig, args, doc: dict) -> int:
    if not args.vary:
        raise CliError("sweep needs at least one --vary name=lo:hi:steps")
    names, axes = [], []
    for item in args.vary:
        if "=" not in item:
            raise CliError(f"--vary must be name=lo:hi:steps, got {item!r}")
        name, spec = item.split("=", 1)
        canonical_key(name.strip())  # raises InvalidParameter for unknown names
        names.append(name.strip())
        axes.append(parse_range(spec, f"--vary {name}"))
    grid = [list(zip(names, vals)) for vals in itertools.product(*axes)]

    n = min(worker_count(), len(grid))
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(lambda a: _sweep_cell(doc, a), grid))
    else:
        rows = [_sweep_cell(doc, a) for a in grid]

    head = ["varied_value"] if len(names) == 1 else list(names)
    if args.format == "json":
        out = []
        for a, row in zip(grid, rows):
            rec = {k: float(v) for k, v in a}
            rec.update(zip(SWEEP_COLUMNS, row))
            out.append(rec)
        _emit(_dump(out), args.out)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head + SWEEP_COLUMNS)
    for a, row in zip(grid, rows):
        w.writerow([_f(float(v)) for _, v in a] + [row[0]] + [_f(v) for v in row[1:]])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="seed for random initial states")
    common.add_argument("--out", metavar="PATH",
                        help="output file (directory for simulate and optimize)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config value (repeatable)")
    common.add_argument("--warn", action="store_true",
                        help="report assumption violations instead of refusing")

    p = argparse.ArgumentParser(prog="ecogame", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="integrate trajectories")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--ic", default="0.5,0.5,0.5", help="initial state x1,x2,n")
    g.add_argument("--random-ics", type=int, metavar="K",
                   help="K seeded uniform initial states in (0.05, 0.95)^3")

    c = sub.add_parser("classify", parents=[common], help="analytic regime and fixed points")
    c.add_argument("--single-pop", type=int, choices=(1, 2),
                   help="classify one population on its own")

    sub.add_parser("optimize", parents=[common], help="optimal consumption rate of pop2")

    se = sub.add_parser("sensitivity", parents=[common], help="resource sensitivities")
    se.add_argument("--grid", metavar="LO:HI:N,LO:HI:N", help="d_sp0 and d_rt0 grid")

    sw = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    sw.add_argument("--vary", action="append", default=[], metavar="NAME=LO:HI:N",
                    help="parameter range (repeat for a product grid)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        raw = read_config_file(args.config) if args.config else None
        doc = build_document(raw, overrides)
        rc = run_config_from_document(doc)
        if args.command == "simulate" and args.out:
            os.makedirs(args.out, exist_ok=True)
        handler = {
            "simulate": cmd_simulate,
            "classify": cmd_classify,
            "optimize": cmd_optimize,
            "sensitivity": cmd_sensitivity,
        }.get(args.command)
        return handler(rc, args) if handler else cmd_sweep(rc, args, doc)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except AssumptionViolation as exc:
        print(f"error: assumption violated: {', '.join(exc.violations)}", file=sys.stderr)
        return EXIT_CONFIG
    except BoundaryPolicy as exc:
        print(f"error: boundary policy: {exc}", file=sys.stderr)
        return EXIT_BOUNDARY
    except (NonFiniteState, DegenerateDenominator) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidParameter, OutOfRegion, EcoGameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
