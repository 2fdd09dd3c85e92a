"""Anytime outer loop: explore fresh candidate trajectories by greedy
random-IK chains over sub-sampled path poses, refine each with a two-stage
round, and keep the cheapest refined trajectory that passes the constraint
gate. Quality improves monotonically until the planning budget runs out.
"""

from dataclasses import dataclass, field
import threading
import time

import numpy as np

from . import kinematics as kin
from . import metrics as met
from . import objective as obj
from . import optimizer as opt
from . import rotations as rot
from . import workspace as ws
from .clock import WorkMeter

# hard real-time stop as a multiple of the metered budget; a safety net only
_REAL_TIME_FACTOR = 5.0


@dataclass
class Problem:
    """One planning instance: robot, obstacles, target path, optional fixed
    start configuration, and the optimizer constants."""

    chain: kin.Chain
    scene: ws.Scene
    path: obj.PathSpec
    start: np.ndarray | None = None
    params: opt.TormParams = field(default_factory=opt.TormParams)
    # source descriptors so a problem can be written back to disk
    chain_file: str | None = None
    scene_file: str | None = None
    path_source: str | None = None

    def __post_init__(self):
        if len(self.path) < 2:
            raise ValueError("path must contain at least two poses")
        if self.start is not None:
            self.start = self.chain.check_config(np.asarray(self.start, dtype=float))
            pose = kin.fk(self.chain, self.start)
            res = kin.pose_residual(self.path.pose(0), pose, self.params.w_rot)
            if np.linalg.norm(res) > max(self.params.ik_tolerance, 1e-6) * 10.0:
                raise ValueError(
                    "fixed start configuration does not reach the first path pose "
                    f"(residual norm {np.linalg.norm(res):.2e})"
                )


@dataclass
class HistoryEntry:
    time: float          # metered planning seconds at the improvement
    pose_error: float    # best average pose error so far
    cost: float          # best total cost so far


@dataclass
class SolveResult:
    status: str                          # "ok" or "no_solution"
    trajectory: obj.Trajectory | None
    cost: float
    pose_error: float
    feasibility: opt.FeasibilityReport | None
    history: list
    initial_solution_time: float
    rounds: int
    diagnostics: dict = field(default_factory=dict)


def subsample(path, m):
    """Indices {0, m, 2m, ...} plus the final index n (always anchored)."""
    if len(path) == 0:
        raise ValueError("empty path")
    if m < 1:
        raise ValueError("m must be at least 1")
    n = len(path) - 1
    idx = list(range(0, n + 1, m))
    if idx[-1] != n:
        idx.append(n)
    return np.asarray(idx, dtype=int)


def interpolate(configs, indices, n, dt=1.0):
    """Linear interpolation of anchor configurations onto all n+1 waypoints.

    `indices` must be strictly increasing, start at 0 and end at n, with one
    configuration per index."""
    configs = np.asarray(configs, dtype=float)
    indices = np.asarray(indices, dtype=int)
    if indices.ndim != 1 or configs.shape[0] != indices.shape[0]:
        raise ValueError("need one configuration per index")
    if indices[0] != 0 or indices[-1] != n or np.any(np.diff(indices) <= 0):
        raise ValueError("indices must be strictly increasing from 0 to n")
    out = np.empty((n + 1, configs.shape[1]))
    for r in range(len(indices) - 1):
        a, b = indices[r], indices[r + 1]
        t = np.arange(a, b + 1) if r == len(indices) - 2 else np.arange(a, b)
        w = (t - a) / (b - a)
        out[t] = (1.0 - w)[:, None] * configs[r] + w[:, None] * configs[r + 1]
    return obj.Trajectory(out, dt)


def _segment_scores(problem, prev_q, candidates, lo, hi, weights):
    """Objective restricted to the interpolated segment lo..hi, per candidate."""
    chain, path, params = problem.chain, problem.path, problem.params
    B = candidates.shape[0]
    L = hi - lo
    w = (np.arange(L + 1) / L)[None, :, None]
    segs = (1.0 - w) * prev_q[None, None, :] + w * candidates[:, None, :]   # (B, L+1, d)
    flat = segs.reshape(-1, chain.d)

    pos, quat = kin.fk_batch(chain, flat)
    t_pos = np.tile(path.positions[lo : hi + 1], (B, 1))
    t_quat = np.tile(path.orientations[lo : hi + 1], (B, 1))
    res = kin.pose_residual_batch(t_pos, t_quat, pos, rot.normalize(quat), params.w_rot)
    scores = 0.5 * np.sum(res.reshape(B, L + 1, 6) ** 2, axis=(1, 2))

    steps = np.diff(segs, axis=1) / params.dt
    scores += weights.lambda2 * 0.5 * np.sum(steps**2, axis=(1, 2))

    if weights.lambda1 > 0.0 and len(problem.scene) > 0 and chain.n_spheres > 0:
        pts = kin.body_points_batch(chain, flat).reshape(B, L + 1, chain.n_spheres, 3)
        D = ws.sdf_eval(problem.scene, pts.reshape(-1, 3)).reshape(pts.shape[:3])
        D = D - chain._sphere_radii
        c, _ = ws.obstacle_cost(D, problem.scene.epsilon)
        seg_len = np.linalg.norm(pts[:, 1:] - pts[:, :-1], axis=-1)
        scores += weights.lambda1 * np.sum(0.5 * (c[:, 1:] + c[:, :-1]) * seg_len, axis=(1, 2))
    return scores


def seed_trajectory(problem, rng, meter=None):
    """Greedy random-IK seeding over the sub-sampled poses.

    At each sub-sampled pose, up to k random-seed IK solutions are drawn;
    the one whose interpolated connection from the previous anchor scores
    lowest on the objective wins (ties to the first found). Returns None
    when some pose yields no IK solution at all. All poses' candidates are
    solved in one batch; the greedy selection then walks the poses in order.
    """
    chain, path, params = problem.chain, problem.path, problem.params
    meter = meter or WorkMeter()
    weights = params.weights(path.n)
    ik = params.ik_params()
    S = subsample(path, params.m)

    need_ik = list(range(len(S))) if problem.start is None else list(range(1, len(S)))
    k = params.k
    seeds = rng.uniform(chain.lower, chain.upper, size=(len(need_ik) * k, chain.d))
    t_pos = np.repeat(path.positions[S[need_ik]], k, axis=0)
    t_quat = np.repeat(path.orientations[S[need_ik]], k, axis=0)
    sols, ok, rows = kin.solve_ik_batch(chain, t_pos, t_quat, seeds, ik)
    meter.charge_ik(rows)

    per_pose = {}
    for slot, r in enumerate(need_ik):
        hits = np.flatnonzero(ok[slot * k : (slot + 1) * k])
        if hits.size == 0:
            return None
        per_pose[r] = sols[slot * k : (slot + 1) * k][hits]

    anchors = [problem.start if problem.start is not None else per_pose[0][0]]
    for r in range(1, len(S)):
        lo, hi = int(S[r - 1]), int(S[r])
        candidates = per_pose[r]
        scores = _segment_scores(problem, anchors[-1], candidates, lo, hi, weights)
        meter.charge_scoring(candidates.shape[0] * (hi - lo + 1))
        anchors.append(candidates[int(np.argmin(scores))])

    return interpolate(np.array(anchors), S, path.n, dt=params.dt)


def _resolve_threshold(problem):
    params = problem.params
    if params.manipulability_threshold is not None:
        return float(params.manipulability_threshold)
    rng = np.random.default_rng([params.seed, 977])
    return opt.manipulability_threshold(problem.chain, rng, params.manipulability_samples)


class _Search:
    """Shared incumbent state for one solve; thread-safe by a single lock."""

    def __init__(self, problem, form, threshold, progress):
        self.problem = problem
        self.form = form
        self.threshold = threshold
        self.progress = progress
        self.lock = threading.Lock()
        self.incumbent = None
        self.incumbent_cost = float("inf")
        self.incumbent_report = None
        self.best_pose_error = float("inf")
        self.best_infeasible = None          # (cost, traj, report)
        self.history = []
        self.rounds = 0

    def pose_error_of(self, traj):
        return met.pose_error(traj, self.problem.path, self.problem.chain, self.problem.params.w_rot)

    def offer(self, result, stamp):
        """Compare-by-cost incumbent exchange for a gated round result."""
        p = self.problem
        with self.lock:
            if result.feasible and result.cost < self.incumbent_cost:
                self.incumbent = result.trajectory
                self.incumbent_cost = result.cost
                self.incumbent_report = result.report
                self.best_pose_error = min(self.best_pose_error, self.pose_error_of(result.trajectory))
                entry = HistoryEntry(stamp, self.best_pose_error, self.incumbent_cost)
                self.history.append(entry)
                if self.progress is not None:
                    self.progress(entry.time, entry.cost, entry.pose_error)
            elif not result.feasible and (
                self.best_infeasible is None or result.cost < self.best_infeasible[0]
            ):
                report = opt.check_constraints(
                    result.trajectory, p.path, p.chain, p.scene, p.params, threshold=self.threshold
                )
                self.best_infeasible = (result.cost, result.trajectory, report)

    def result(self):
        p = self.problem
        if self.incumbent is None:
            diagnostics = {}
            if self.best_infeasible is not None:
                diagnostics = {
                    "best_infeasible_cost": self.best_infeasible[0],
                    "best_infeasible_report": self.best_infeasible[2],
                }
            return SolveResult(
                status="no_solution",
                trajectory=None if self.best_infeasible is None else self.best_infeasible[1],
                cost=float("inf") if self.best_infeasible is None else self.best_infeasible[0],
                pose_error=float("inf"),
                feasibility=None if self.best_infeasible is None else self.best_infeasible[2],
                history=[],
                initial_solution_time=float("inf"),
                rounds=self.rounds,
                diagnostics=diagnostics,
            )
        return SolveResult(
            status="ok",
            trajectory=self.incumbent,
            cost=self.incumbent_cost,
            pose_error=self.pose_error_of(self.incumbent),
            feasibility=self.incumbent_report,
            history=self.history,
            initial_solution_time=self.history[0].time,
            rounds=self.rounds,
            diagnostics={},
        )


def _refine(search, seed_traj, meter):
    p = search.problem
    result = opt.tsgd_round(
        seed_traj, p.path, p.chain, p.scene, search.form, p.params,
        threshold=search.threshold, cost_to_beat=search.incumbent_cost,
    )
    meter.charge_tsgd(result.stats["iterations"], result.stats["waypoints"])
    meter.charge_checks(result.stats["checks"], result.stats["waypoints"])
    return result


def torm_solve(problem, progress=None):
    """Anytime solve: seed, refine, gate, repeat until the budget.

    `progress`, when given, is called with (time, best_cost, best_pose_error)
    each time the incumbent improves. The returned history carries the same
    events; its cost and pose-error sequences are non-increasing. With
    params.threads == 1 (the reproducibility reference) the budget and all
    timestamps come from the deterministic work meter; with more threads the
    exploration rounds run concurrently against the real wall clock."""
    params = problem.params
    if params.budget <= 0.0:
        raise ValueError("budget must be positive")

    start_fixed = problem.start is not None
    form = obj.build_smoothness(
        problem.path.n, problem.chain.d, params.dt, start_fixed, q0=problem.start
    )
    threshold = _resolve_threshold(problem)
    search = _Search(problem, form, threshold, progress)

    if params.threads > 1 and not params.disable_exploration:
        return _solve_threaded(search)

    meter = WorkMeter()
    wall_start = time.perf_counter()
    real_cap = _REAL_TIME_FACTOR * params.budget + 30.0
    hit_real_cap = False
    current = None                    # refinement chain for the no-exploration mode

    while meter.seconds < params.budget:
        if time.perf_counter() - wall_start > real_cap:
            hit_real_cap = True
            break
        search.rounds += 1
        if params.disable_exploration and current is not None:
            seed_traj = current
        else:
            rng = np.random.default_rng([params.seed, search.rounds])
            seed_traj = seed_trajectory(problem, rng, meter=meter)
            if seed_traj is None:
                continue
        if meter.seconds >= params.budget:
            break
        result = _refine(search, seed_traj, meter)
        if params.disable_exploration:
            current = result.trajectory
        search.offer(result, meter.seconds)

    out = search.result()
    if out.status == "ok":
        out.diagnostics["planning_time"] = meter.seconds
    if hit_real_cap:
        out.diagnostics["real_time_cap"] = True
    return out


def _solve_threaded(search):
    """Wall-clock variant: exploration rounds run in a small thread pool with
    an atomic compare-by-cost incumbent exchange. Not bit-reproducible."""
    params = search.problem.params
    deadline = time.perf_counter() + params.budget
    start = time.perf_counter()
    counter = [0]

    def next_attempt():
        with search.lock:
            counter[0] += 1
            search.rounds += 1
            return counter[0]

    def worker():
        meter = WorkMeter()
        while time.perf_counter() < deadline:
            attempt = next_attempt()
            rng = np.random.default_rng([params.seed, attempt])
            seed_traj = seed_trajectory(search.problem, rng, meter=meter)
            if seed_traj is None:
                continue
            if time.perf_counter() >= deadline:
                break
            result = _refine(search, seed_traj, meter)
            search.offer(result, time.perf_counter() - start)

    threads = [threading.Thread(target=worker) for _ in range(params.threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    out = search.result()
    if out.status == "ok":
        out.diagnostics["planning_time"] = time.perf_counter() - start
    return out
