"""Benchmark harness: repeated seeded solves over a problem suite with the
full method and its two ablations, written out as plot-ready CSV."""

from concurrent.futures import ProcessPoolExecutor
import csv
import dataclasses
import os

from . import fileio
from . import metrics as met
from .explorer import torm_solve

VARIANTS = ("full", "no-tsgd", "no-ie")

_ROW_FIELDS = [
    "problem",
    "variant",
    "seed",
    "status",
    "pose_error",
    "trajectory_length",
    "initial_solution_time",
    "planning_time",
]

_SUMMARY_FIELDS = [
    "problem",
    "variant",
    "runs",
    "failures",
    "pose_error_avg",
    "pose_error_min",
    "pose_error_max",
    "trajectory_length_avg",
    "initial_solution_time_avg",
    "planning_time_avg",
]


def apply_variant(params, variant):
    if variant == "full":
        return dataclasses.replace(params, disable_tsgd=False, disable_exploration=False)
    if variant == "no-tsgd":
        return dataclasses.replace(params, disable_tsgd=True, disable_exploration=False)
    if variant == "no-ie":
        return dataclasses.replace(params, disable_tsgd=False, disable_exploration=True)
    raise ValueError(f"unknown variant '{variant}' (choose from {VARIANTS})")


def run_cell(problem_file, name, variant, seed, budget):
    """One seeded solve of one problem under one variant; never raises for
    per-run planner failures (they become a status row)."""
    problem = fileio.load_problem(problem_file)
    problem.params = apply_variant(
        dataclasses.replace(problem.params, seed=seed, budget=budget, threads=1), variant
    )
    row = {"problem": name, "variant": variant, "seed": seed}
    history = []
    try:
        result = torm_solve(problem)
    except Exception as exc:  # record, don't abort the suite
        row.update(status=f"error:{type(exc).__name__}", pose_error="", trajectory_length="",
                   initial_solution_time="", planning_time="")
        return row, history
    if result.status != "ok":
        row.update(status=result.status, pose_error="", trajectory_length="",
                   initial_solution_time="", planning_time="")
        return row, history
    m = met.compute_metrics(
        result.trajectory, problem.path, problem.chain, problem.params.w_rot,
        initial_solution_time=result.initial_solution_time,
        planning_time=result.diagnostics.get("planning_time", budget),
    )
    row.update(
        status="ok",
        pose_error=repr(m.pose_error),
        trajectory_length=repr(m.trajectory_length),
        initial_solution_time=repr(m.initial_solution_time),
        planning_time=repr(m.planning_time),
    )
    history = [(h.time, h.cost, h.pose_error) for h in result.history]
    return row, history


def _cell_args(entries, runs, budget, seed0, variants):
    for name, problem_file in entries:
        for variant in variants:
            for run in range(runs):
                yield problem_file, name, variant, seed0 + run, budget


def run_bench(suite_file, runs, budget, out_csv, seed0=0, threads=1, history_dir=None,
              variants=VARIANTS):
    """Run the whole suite and write per-run rows plus an aggregate summary.

    Returns the per-run rows. Output order is sorted by (problem, variant,
    seed) so results match regardless of the worker count; every cell is a
    single-threaded seeded solve and therefore reproducible on its own."""
    entries = fileio.load_suite(suite_file)
    cells = list(_cell_args(entries, runs, budget, seed0, variants))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(run_cell, *zip(*cells)))
    else:
        outputs = [run_cell(*args) for args in cells]

    rows = [row for row, _ in outputs]
    order = {v: i for i, v in enumerate(variants)}
    rows.sort(key=lambda r: (r["problem"], order[r["variant"]], r["seed"]))

    if history_dir is not None:
        os.makedirs(history_dir, exist_ok=True)
        for (row, history), args in zip(outputs, cells):
            fname = os.path.join(history_dir, f"{row['problem']}_{row['variant']}_{row['seed']}.csv")
            _write_history(fname, history)

    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_ROW_FIELDS)
        writer.writeheader()
        writer.writerows(rows)

    summary = summarize(rows)
    stem, ext = os.path.splitext(out_csv)
    with open(stem + "_summary" + (ext or ".csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SUMMARY_FIELDS)
        writer.writeheader()
        writer.writerows(summary)
    return rows


def _write_history(fname, history):
    with open(fname, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "best_cost", "best_pose_error"])
        for t, cost, err in history:
            writer.writerow([repr(t), repr(cost), repr(err)])


def summarize(rows):
    """Aggregate per-run rows into Table-style avg/min/max statistics."""
    groups = {}
    for row in rows:
        groups.setdefault((row["problem"], row["variant"]), []).append(row)
    out = []
    for (problem, variant), group in sorted(groups.items()):
        ok = [r for r in group if r["status"] == "ok"]
        entry = {
            "problem": problem,
            "variant": variant,
            "runs": len(group),
            "failures": len(group) - len(ok),
        }
        if ok:
            errs = [float(r["pose_error"]) for r in ok]
            entry.update(
                pose_error_avg=repr(sum(errs) / len(errs)),
                pose_error_min=repr(min(errs)),
                pose_error_max=repr(max(errs)),
                trajectory_length_avg=repr(
                    sum(float(r["trajectory_length"]) for r in ok) / len(ok)
                ),
                initial_solution_time_avg=repr(
                    sum(float(r["initial_solution_time"]) for r in ok) / len(ok)
                ),
                planning_time_avg=repr(sum(float(r["planning_time"]) for r in ok) / len(ok)),
            )
        else:
            entry.update(
                pose_error_avg="", pose_error_min="", pose_error_max="",
                trajectory_length_avg="", initial_solution_time_avg="", planning_time_avg="",
            )
        out.append(entry)
    return out
