"""Command-line front end.

Subcommands:
    solve  <problem>   plan a trajectory, optionally exporting CSVs
    bench  <suite>     run the benchmark matrix over a problem suite
    paths  <kind>      generate a path CSV (square, s_curve, polyline, rotation)
    check  <problem> <traj.csv>   feasibility report; exit 0 iff feasible
"""

import argparse
import dataclasses
import sys

import numpy as np

from . import bench as bench_mod
from . import fileio
from . import metrics as met
from . import paths as path_gen
from .explorer import torm_solve
from .optimizer import check_constraints


def _show_config(params):
    print("effective parameters:")
    for f in dataclasses.fields(params):
        print(f"  {f.name} = {getattr(params, f.name)}")


def _cmd_solve(args):
    problem = fileio.load_problem(args.problem)
    updates = {}
    if args.budget is not None:
        updates["budget"] = args.budget
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    problem.params = dataclasses.replace(problem.params, **updates)
    problem.params = bench_mod.apply_variant(problem.params, args.variant)
    if args.show_config:
        _show_config(problem.params)
        return 0

    def live(t, cost, err):
        print(f"t={t:8.2f}s  best_cost={cost:.6e}  best_pose_error={err:.6e}")

    result = torm_solve(problem, progress=live if not args.quiet else None)
    if result.status != "ok":
        print(f"no feasible trajectory found ({result.rounds} exploration rounds)")
        if result.feasibility is not None:
            _print_report(result.feasibility)
        return 2
    m = met.compute_metrics(
        result.trajectory, problem.path, problem.chain, problem.params.w_rot,
        initial_solution_time=result.initial_solution_time,
        planning_time=result.diagnostics.get("planning_time", problem.params.budget),
    )
    print(
        f"solved: pose_error={m.pose_error:.6e}  trajectory_length={m.trajectory_length:.4f} rad  "
        f"ist={m.initial_solution_time:.2f}s  pt={m.planning_time:.2f}s  rounds={result.rounds}"
    )
    if args.out:
        fileio.export_trajectory(result.trajectory, args.out)
        print(f"trajectory written to {args.out}")
    if args.history:
        bench_mod._write_history(args.history, [(h.time, h.cost, h.pose_error) for h in result.history])
        print(f"history written to {args.history}")
    return 0


def _cmd_bench(args):
    if args.show_config:
        from .optimizer import TormParams

        _show_config(TormParams(budget=args.budget, seed=args.seed))
        return 0
    rows = bench_mod.run_bench(
        args.suite,
        runs=args.runs,
        budget=args.budget,
        out_csv=args.out,
        seed0=args.seed,
        threads=args.threads,
        history_dir=args.history_dir,
    )
    failures = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} runs written to {args.out} ({failures} failures)")
    return 0


def _cmd_paths(args):
    kwargs = {"spacing": args.spacing}
    if args.kind in ("square",):
        kwargs["side"] = args.side
    if args.kind in ("s_curve", "s-curve"):
        kwargs["radius"] = args.radius
    if args.kind == "polyline":
        kwargs["strokes"] = (
            fileio._load_strokes(args.strokes) if args.strokes else path_gen.cursive_sample_strokes()
        )
        kwargs["scale"] = args.scale
    if args.kind == "rotation":
        kwargs["position"] = np.array(args.center)
        kwargs["amplitude_deg"] = args.amplitude
        if args.rpy is not None:
            from . import rotations as rot

            kwargs["base_orientation"] = rot.from_rpy(*args.rpy)
    else:
        kwargs["center"] = np.array(args.center)
        kwargs["plane"] = args.plane
        if args.rpy is not None:
            from . import rotations as rot

            kwargs["orientation"] = rot.from_rpy(*args.rpy)
    spec = path_gen.generate_path(args.kind, **kwargs)
    fileio.save_path_csv(spec, args.out)
    print(f"{len(spec)} waypoints written to {args.out}")
    return 0


def _print_report(report):
    print(f"  limits_ok      : {report.limits_ok}")
    vel = report.worst_velocity
    extra = f" (worst {vel[2]:.3f} rad/s at waypoint {vel[0]}, joint {vel[1]})" if vel else ""
    print(f"  velocity_ok    : {report.velocity_ok}{extra}")
    print(
        f"  singularity_ok : {report.singularity_ok} "
        f"(min manipulability {report.min_manipulability:.4g}, threshold {report.manipulability_threshold:.4g})"
    )
    hits = report.collision_waypoints[:5]
    self_hits = report.self_collision_waypoints[:5]
    print(
        f"  collision_free : {report.collision_free} "
        f"(worst clearance {report.worst_clearance:.4f} m at waypoint {report.worst_clearance_waypoint};"
        f" colliding waypoints {hits}{'...' if len(report.collision_waypoints) > 5 else ''};"
        f" self-collisions {self_hits}{'...' if len(report.self_collision_waypoints) > 5 else ''})"
    )


def _cmd_check(args):
    problem = fileio.load_problem(args.problem)
    traj = fileio.load_trajectory(args.trajectory)
    if traj.configs.shape[0] != len(problem.path):
        print(
            f"trajectory has {traj.configs.shape[0]} waypoints, path has {len(problem.path)}",
            file=sys.stderr,
        )
        return 2
    report = check_constraints(traj, problem.path, problem.chain, problem.scene, problem.params)
    _print_report(report)
    print("feasible" if report.feasible else "infeasible")
    return 0 if report.feasible else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="torm", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="plan a trajectory for a problem file")
    p.add_argument("problem")
    p.add_argument("--budget", type=float, default=None, help="planning budget, seconds")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--variant", choices=bench_mod.VARIANTS, default="full")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="trajectory CSV output")
    p.add_argument("--history", default=None, help="history CSV output")
    p.add_argument("--quiet", action="store_true", help="suppress live progress lines")
    p.add_argument("--show-config", action="store_true", help="print effective parameters and exit")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run the benchmark matrix over a suite file")
    p.add_argument("suite")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="base seed; run r uses seed+r")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--history-dir", default=None)
    p.add_argument("--show-config", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("paths", help="generate a path CSV")
    p.add_argument("kind", choices=["square", "s_curve", "s-curve", "polyline", "rotation"])
    p.add_argument("--out", required=True)
    p.add_argument("--spacing", type=float, default=path_gen.DEFAULT_SPACING)
    p.add_argument("--side", type=float, default=0.4, help="square side, m")
    p.add_argument("--radius", type=float, default=0.1, help="s_curve radius, m")
    p.add_argument("--scale", type=float, default=1.0, help="polyline scale factor")
    p.add_argument("--strokes", default=None, help="polyline strokes JSON file")
    p.add_argument("--amplitude", type=float, default=45.0, help="rotation sweep, degrees")
    p.add_argument("--center", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    p.add_argument("--plane", choices=["xy", "xz", "yz"], default="xy")
    p.add_argument("--rpy", type=float, nargs=3, default=None, help="fixed orientation")
    p.set_defaults(func=_cmd_paths)

    p = sub.add_parser("check", help="feasibility-check a trajectory CSV against a problem")
    p.add_argument("problem")
    p.add_argument("trajectory")
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except fileio.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
