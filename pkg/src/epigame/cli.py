"""Command line entry point: ``epigame {simulate,solve,conditions,sweep}``.

Region numbers in every output are 1-based. Floats are written with 12
significant digits so repeated runs give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import conditions, equilibrium, sweep
from .scenario import ScenarioError, builtin, load_scenario, scenario_dict
from .sir_core import IntegrationDiverged, integrate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_NE = 3


def fmt(x):
    return format(float(x), ".12g")


def _round(obj):
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(fmt(x))
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_round(v) for v in obj]
    return obj


def _write(out, text):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump_json(out, doc):
    _write(out, json.dumps(_round(doc), indent=2, sort_keys=False) + "\n")


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load(args):
    if args.scenario:
        spec, plan = load_scenario(args.scenario)
    else:
        spec, plan = builtin(args.builtin)
    if args.step is not None:
        spec = replace(spec, step=args.step)
    if args.grid_points is not None:
        spec = spec.with_grid_points(args.grid_points)
    return spec, plan


def _parse_profile(text, K):
    vals = [float(x) for x in text.split(",")]
    if len(vals) != K:
        raise ValueError(f"--profile needs {K} comma-separated values")
    return np.array(vals)


def cmd_simulate(args):
    spec, _ = _load(args)
    if args.profile:
        u = _parse_profile(args.profile, spec.K)
        if not args.allow_off_grid:
            u = np.array([spec.actions.grids[k][spec.actions.index_of(k, x)] for k, x in enumerate(u)])
    elif args.at == "u_min":
        u = spec.actions.u_min
    elif args.at == "u_max":
        u = spec.actions.u_max
    elif args.at == "ne":
        u = equilibrium.solve(spec, workers=args.workers).worst_ne_profile
    else:
        u = equilibrium.social_optimum(spec, workers=args.workers)[0]
    traj = integrate(spec.epidemic, u, spec.T, spec.step)
    K = spec.K
    header = ["t"] + [f"{c}_{k + 1}" for c in "sir" for k in range(K)]
    rows = [
        [fmt(t)] + [fmt(x) for x in traj.s[j]] + [fmt(x) for x in traj.i[j]] + [fmt(x) for x in traj.r[j]]
        for j, t in enumerate(traj.times)
    ]
    _write(args.out, _csv_text(header, rows))
    return EXIT_OK


def cmd_solve(args):
    spec, _ = _load(args)
    doc = {"scenario": scenario_dict(spec)}
    status = EXIT_OK
    try:
        doc["equilibrium"] = equilibrium.solve(spec, workers=args.workers).as_dict()
    except equilibrium.NoEquilibrium as exc:
        doc["equilibrium"] = {"error": str(exc)}
        status = EXIT_NO_NE
    doc["conditions"] = conditions.analyze(spec, n_random=args.probes, seed=args.seed).as_dict()
    _dump_json(args.out, doc)
    return status


def cmd_conditions(args):
    spec, _ = _load(args)
    _dump_json(args.out, conditions.analyze(spec, n_random=args.probes, seed=args.seed).as_dict())
    return EXIT_OK


def _profile_cell(p):
    return ";".join(fmt(x) for x in p)


def cmd_sweep(args):
    spec, plan = _load(args)
    if plan is None:
        raise ScenarioError("sweep", "scenario has no sweep section")
    rows = sweep.run_sweep(spec, plan, workers=args.workers)
    body = [
        [
            r.varied_region + 1,
            fmt(r.cross_rate),
            fmt(r.poa),
            fmt(r.poc),
            _profile_cell(r.worst_ne_profile),
            _profile_cell(r.social_opt_profile),
            "true" if r.in_wir_flag else "false",
            r.ne_count,
            r.note,
        ]
        for r in rows
    ]
    _write(args.out, _csv_text(sweep.CSV_HEADER, body))
    if args.out not in (None, "-"):
        meta = {
            "sweep": plan.as_dict(),
            "nu_beta": conditions.nu_beta(spec).tolist(),
            "n_points": spec.actions.n_points,
            "T_days": spec.T,
            "step_days": spec.step,
        }
        _dump_json(str(args.out) + ".meta.json", meta)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="epigame", description="Networked SIR epidemic game solver")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--builtin", default="table1", help="built-in scenario name (default: table1)")
    common.add_argument("--out", default="-", help="output path (default: stdout)")
    common.add_argument("--step", type=float, help="integrator step in days")
    common.add_argument("--grid-points", type=int, help="override action grid size")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", parents=[common], help="trajectory CSV for one profile")
    p.add_argument("--profile", help="comma-separated actions")
    p.add_argument("--at", choices=["u_min", "u_max", "ne", "opt"], default="u_min")
    p.add_argument("--allow-off-grid", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", parents=[common], help="equilibria, optimum, PoA/PoC and condition report")
    p.add_argument("--probes", type=int, default=3, help="random grid corners used as probes")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("conditions", parents=[common], help="condition report only")
    p.add_argument("--probes", type=int, default=3)
    p.set_defaults(func=cmd_conditions)

    p = sub.add_parser("sweep", parents=[common], help="PoA/PoC over cross-rate values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, equilibrium.BudgetExceeded, IntegrationDiverged, ValueError, OSError) as exc:
        print(f"epigame: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
