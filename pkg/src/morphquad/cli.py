"""Command-line front end.

Verbs: ``run`` executes a scenario file, ``sweep`` runs the payload-offset
experiment matrix, ``morphology`` solves a single optimal-morphology problem,
``validate`` checks a scenario file without running it.

Exit codes: 0 success, 2 validation failure, 3 crash, 4 infeasible
morphology.  All angles cross this boundary in degrees.  The environment
variable MORPHQUAD_OUT_DIR overrides the directory for generated files.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .geometry import AirframeParams, MassProperties, Morphology, compose_mass_properties, x_config
from .morphology_opt import (
    OptimizationError,
    OptimizerSettings,
    efficiency_grid,
    optimize_morphology,
)
from .presets import SWEEP_DIRECTIONS, SWEEP_MODES, SWEEP_OFFSETS, payload_hover
from .scenario import ScenarioError, load_scenario
from .simulator import run_scenario
from .telemetry import write_summary

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CRASH = 3
EXIT_INFEASIBLE = 4


def _out_dir(default="."):
    return os.environ.get("MORPHQUAD_OUT_DIR", default)


def cmd_run(args):
    try:
        spec = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    result = run_scenario(spec)
    out = _out_dir()
    os.makedirs(out, exist_ok=True)
    telemetry_path = args.telemetry or spec.telemetry_csv or os.path.join(out, f"{spec.name}_telemetry.csv")
    summary_path = args.summary or spec.summary_json or os.path.join(out, f"{spec.name}_summary.json")
    result.telemetry.write_csv(telemetry_path)
    write_summary(result.summary, summary_path)
    s = result.summary
    print(f"{spec.name}: completed={s['completed']} crash={s['crash']} "
          f"rms_err={s.get('rms_pos_err_steady_m', float('nan')):.4f} m "
          f"flight_time={s.get('flight_time_s', 0.0):.1f} s")
    print(f"telemetry: {telemetry_path}")
    print(f"summary:   {summary_path}")
    if s["crash"]:
        print(f"crash reason: {s['crash_reason']}", file=sys.stderr)
        return EXIT_CRASH
    return EXIT_OK


def cmd_sweep(args):
    offsets = [float(v) / 100.0 for v in args.offsets_cm.split(",") if v != ""]
    directions = [d.strip() for d in args.directions.split(",") if d.strip()]
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for d in directions:
        if d not in SWEEP_DIRECTIONS:
            print(f"validation error: direction {d!r}", file=sys.stderr)
            return EXIT_VALIDATION
    for m in modes:
        if m not in ("morphing", "fixed-frame", "morphing-legacy-controller"):
            print(f"validation error: mode {m!r}", file=sys.stderr)
            return EXIT_VALIDATION

    out = _out_dir()
    os.makedirs(out, exist_ok=True)
    path = args.out or os.path.join(out, "sweep.csv")
    header = ["mode", "direction", "offset_cm", "status", "flight_time_s",
              "thrust_spread_frac", "max_pos_err_m", "rms_pos_err_steady_m",
              "theta1_deg", "theta2_deg", "theta3_deg", "theta4_deg"]
    rows = []
    for mode in modes:
        for direction in directions:
            for offset in offsets:
                spec = payload_hover(mode, offset, direction,
                                     duration=args.duration, noisy=args.noisy,
                                     seed=args.seed)
                try:
                    result = run_scenario(spec)
                    s = result.summary
                    status = "crash" if s["crash"] else "ok"
                    rows.append([mode, direction, offset * 100.0, status,
                                 round(s.get("flight_time_s", 0.0), 2),
                                 round(s.get("thrust_spread_steady_frac", float("nan")), 5),
                                 round(s.get("max_pos_err_m", float("nan")), 4),
                                 round(s.get("rms_pos_err_steady_m", float("nan")), 4),
                                 *[round(a, 2) for a in s.get("arm_final_deg", [float("nan")] * 4)]])
                except Exception as exc:   # cell failures recorded, sweep continues
                    rows.append([mode, direction, offset * 100.0,
                                 f"error: {exc}", "", "", "", "", "", "", "", ""])
                print(f"  {mode} {direction} {offset*100:.0f} cm: {rows[-1][3]}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"sweep table: {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_morphology(args):
    params = AirframeParams()
    if args.cog_list:
        return _morphology_table(args, params)
    cog = np.array([args.cog_x, args.cog_y, params.z_cog_nominal])
    reference = compose_mass_properties(x_config(), params)
    props = MassProperties(m=args.mass, r_cog=cog, J=reference.J)
    try:
        res = optimize_morphology(x_config(), props, params)
    except OptimizationError as exc:
        print(f"infeasible morphology: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    theta_deg = np.rad2deg(res.morphology.theta)
    print(f"mass {args.mass:.3f} kg, CoG ({args.cog_x:+.3f}, {args.cog_y:+.3f}) m")
    print("theta_deg: " + "  ".join(f"{v:8.3f}" for v in theta_deg))
    print(f"efficiency:      {res.eta:.6f} N/W")
    print(f"controllability: {res.C:.4f}")
    print(f"converged: {res.converged} (iterations {res.iterations}, residual {res.residual:.2e})")
    if args.verify_grid:
        axis = np.deg2rad(np.arange(np.rad2deg(params.theta_min),
                                    np.rad2deg(params.theta_max) + 0.1, 15.0))
        grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), -1).reshape(-1, 4)
        etas = efficiency_grid(grid, props, params)
        best = np.nanmax(etas)
        print(f"grid check: best of {np.isfinite(etas).sum()} feasible grid points "
              f"eta={best:.6f}, margin {res.eta - best:+.2e}")
        if res.eta < best - 1e-4:
            print("grid check failed", file=sys.stderr)
            return EXIT_INFEASIBLE
    return EXIT_OK


def _morphology_table(args, params):
    """Batch mode: converged morphology per CoG point, written as CSV."""
    from .morphology_opt import sweep_cog_table

    try:
        points = [tuple(float(v) for v in pair.split(",")) for pair in args.cog_list.split()]
        if any(len(p) != 2 for p in points):
            raise ValueError("each point must be x,y")
    except ValueError as exc:
        print(f"validation error: --cog-list: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rows = sweep_cog_table(points, args.mass, params)
    path = args.table or os.path.join(_out_dir(), "morphology_table.csv")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_cog_m", "y_cog_m", "theta1_deg", "theta2_deg",
                         "theta3_deg", "theta4_deg", "eta_n_per_w",
                         "controllability", "converged"])
        for r in rows:
            writer.writerow([r["x_cog"], r["y_cog"],
                             *[round(float(np.rad2deg(v)), 4) for v in r["theta"]],
                             r["eta"], r["C"], r["converged"]])
    n_ok = sum(1 for r in rows if r["converged"])
    print(f"morphology table: {path} ({len(rows)} points, {n_ok} converged)")
    return EXIT_OK


def cmd_validate(args):
    try:
        spec = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{args.scenario}: valid ({spec.name}, mode {spec.mode}, "
          f"{spec.duration_s:.1f} s, {len(spec.waypoints)} waypoints, "
          f"{len(spec.payload_events)} payload events)")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="morphquad",
        description="Morphing-quadrotor simulation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario YAML file")
    p_run.add_argument("scenario")
    p_run.add_argument("--telemetry", help="telemetry CSV path")
    p_run.add_argument("--summary", help="summary JSON path")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="payload offset x direction x mode matrix")
    p_sweep.add_argument("--offsets-cm", default=",".join(str(o * 100) for o in SWEEP_OFFSETS))
    p_sweep.add_argument("--directions", default=",".join(SWEEP_DIRECTIONS))
    p_sweep.add_argument("--modes", default=",".join(SWEEP_MODES))
    p_sweep.add_argument("--duration", type=float, default=30.0)
    p_sweep.add_argument("--noisy", action="store_true", help="inject sensor noise")
    p_sweep.add_argument("--seed", type=int, default=1)
    p_sweep.add_argument("--out", help="output CSV path")
    p_sweep.set_defaults(func=cmd_sweep)

    p_morph = sub.add_parser("morphology", help="optimal morphology for a mass/CoG")
    p_morph.add_argument("--mass", type=float, required=True)
    p_morph.add_argument("--cog-x", type=float, default=0.0)
    p_morph.add_argument("--cog-y", type=float, default=0.0)
    p_morph.add_argument("--verify-grid", action="store_true",
                         help="cross-check against a 15-degree grid search")
    p_morph.add_argument("--cog-list",
                         help='batch mode: space-separated "x,y" CoG points in meters')
    p_morph.add_argument("--table", help="CSV output path for batch mode")
    p_morph.set_defaults(func=cmd_morphology)

    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
