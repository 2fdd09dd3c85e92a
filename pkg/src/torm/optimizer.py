"""Two-stage gradient descent refinement and the feasibility gate.

One refinement round alternates two updates over a fixed iteration count:
odd iterations take a feasibility step (obstacle + smoothness gradients,
preconditioned by the smoothness metric inverse), even iterations take a
pose-matching step (plain J^T residual, no preconditioner). Joint limits
are repaired by a smooth metric projection after every update. Whenever an
iterate's total cost beats the best cost seen so far, the full constraint
gate runs (limits, velocities, singularity, collision) and the round keeps
the cheapest iterate that passed.
"""

from dataclasses import dataclass, field
import numpy as np

from . import kinematics as kin
from . import objective as obj
from . import workspace as ws


@dataclass(frozen=True)
class TormParams:
    """All optimizer constants; defaults follow the reported configuration."""

    eta1: float = 0.03                 # feasibility-step learning rate
    eta2: float = 1.0                  # pose-step learning rate
    lambda1: float = 1.8               # obstacle weight
    lambda2: float | None = None       # smoothness weight; None -> 5 / (n + 1)
    tsgd_iterations: int = 60          # updates per refinement round
    dt: float = 1.0                    # seconds per waypoint step
    smooth_relaxation: float = 0.01    # damping of the preconditioned smooth step
    epsilon: float = 0.2               # clearance band, m (scenes may override)
    w_rot: float = 0.17                # rotational weight in the pose metric
    velocity_check: bool = True
    manipulability_threshold: float | None = None   # absolute override
    manipulability_samples: int = 1000               # sampling policy size
    seed: int = 0
    budget: float = 30.0               # planning budget, metered seconds
    m: int = 10                        # pose sub-sampling interval
    k: int = 150                       # IK candidates per sub-sampled pose
    projection_alpha: float = 1.0
    projection_rounds: int = 10
    ik_max_iterations: int = 200
    ik_damping: float = 0.05
    ik_step_clamp: float = 0.5
    ik_tolerance: float = 1e-6
    disable_tsgd: bool = False         # ablation: combined single-stage updates
    disable_exploration: bool = False  # ablation: refine one seed only
    threads: int = 1

    def __post_init__(self):
        if self.eta1 <= 0.0 or self.eta2 <= 0.0:
            raise ValueError("learning rates must be positive")
        if self.tsgd_iterations < 2:
            raise ValueError("tsgd_iterations must be at least 2")
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be at least 1")

    def weights(self, n):
        lam2 = self.lambda2 if self.lambda2 is not None else 5.0 / (n + 1)
        return obj.ObjectiveWeights(lambda1=self.lambda1, lambda2=lam2)

    def ik_params(self):
        return kin.IkParams(
            max_iterations=self.ik_max_iterations,
            damping=self.ik_damping,
            step_clamp=self.ik_step_clamp,
            tolerance=self.ik_tolerance,
            w_rot=self.w_rot,
        )


@dataclass
class FeasibilityReport:
    """Result of the full constraint gate over one trajectory."""

    limits_ok: bool
    velocity_ok: bool
    collision_free: bool
    singularity_ok: bool
    worst_velocity: tuple | None = None        # (waypoint, joint, rad_per_s)
    min_manipulability: float = float("inf")
    manipulability_threshold: float = 0.0
    collision_waypoints: list = field(default_factory=list)
    self_collision_waypoints: list = field(default_factory=list)
    worst_clearance: float = float("inf")
    worst_clearance_waypoint: int = -1

    @property
    def feasible(self):
        return self.limits_ok and self.velocity_ok and self.collision_free and self.singularity_ok


def manipulability_threshold(chain, rng, samples=1000):
    """Singularity threshold policy: half the 5th percentile of the
    manipulability over uniform random configurations."""
    if samples < 100:
        raise ValueError("need at least 100 samples for a stable percentile")
    Q = rng.uniform(chain.lower, chain.upper, size=(samples, chain.d))
    w = kin.manipulability_batch(chain, Q)
    return 0.5 * float(np.percentile(w, 5))


def check_constraints(traj, path, chain, scene, params, threshold=None):
    """Feasibility gate: joint limits, per-step velocities, manipulability
    above the threshold, and external/self collision at every waypoint."""
    if path is not None and len(path) != traj.configs.shape[0]:
        raise ValueError("trajectory and path lengths differ")
    Q = traj.configs

    limits_ok = bool(np.all(Q >= chain.lower - 1e-12) and np.all(Q <= chain.upper + 1e-12))

    velocity_ok = True
    worst_velocity = None
    if params.velocity_check and Q.shape[0] > 1:
        rates = np.abs(np.diff(Q, axis=0)) / traj.dt
        ratio = rates / chain.velocity
        i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
        worst_velocity = (int(i + 1), int(j), float(rates[i, j]))
        velocity_ok = bool(rates[i, j] <= chain.velocity[j])

    if threshold is None:
        if params.manipulability_threshold is not None:
            threshold = params.manipulability_threshold
        else:
            rng = np.random.default_rng([params.seed, 977])
            threshold = manipulability_threshold(chain, rng, params.manipulability_samples)
    w = kin.manipulability_batch(chain, Q)
    min_w = float(np.min(w)) if w.size else float("inf")
    singularity_ok = bool(min_w >= threshold)

    clear = ws.body_clearances_batch(scene, chain, Q)
    if clear.size:
        per_wp = np.min(clear, axis=1)
        worst_wp = int(np.argmin(per_wp))
        worst_clear = float(per_wp[worst_wp])
        collision_waypoints = [int(i) for i in np.flatnonzero(per_wp < 0.0)]
    else:
        worst_wp, worst_clear, collision_waypoints = -1, float("inf"), []
    self_hits = ws.self_collision_pairs_batch(chain, Q)
    self_waypoints = [i for i, pairs in enumerate(self_hits) if pairs]
    collision_free = not collision_waypoints and not self_waypoints

    return FeasibilityReport(
        limits_ok=limits_ok,
        velocity_ok=velocity_ok,
        collision_free=collision_free,
        singularity_ok=singularity_ok,
        worst_velocity=worst_velocity,
        min_manipulability=min_w,
        manipulability_threshold=float(threshold),
        collision_waypoints=collision_waypoints,
        self_collision_waypoints=self_waypoints,
        worst_clearance=worst_clear,
        worst_clearance_waypoint=worst_wp,
    )


def smooth_projection(traj, chain, form, alpha=1.0, max_rounds=10):
    """Repair joint-limit violations by spreading the correction through the
    smoothness metric: xi <- xi + alpha * A^-1 v, with v the per-variable
    violation; any residue after max_rounds is hard-clamped. The output
    satisfies the limits exactly and a fixed start is never touched."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    configs = traj.configs.copy()
    free = form.free_block(configs).copy()
    for _ in range(max_rounds):
        v = np.clip(chain.lower - free, 0.0, None) + np.clip(chain.upper - free, None, 0.0)
        if not np.any(v):
            break
        free = free + alpha * form.solve_metric(v)
    free = np.clip(free, chain.lower, chain.upper)
    form.set_free(configs, free)
    return obj.Trajectory(configs, traj.dt)


@dataclass
class TsgdResult:
    """Outcome of one refinement round."""

    trajectory: obj.Trajectory
    cost: float
    feasible: bool
    report: FeasibilityReport | None
    trace: list                       # total cost after every iteration (index 0 = input)
    best_feasible_costs: list         # costs of iterates that passed the gate, in order
    stats: dict


def _pose_step(configs, path, chain, form, eta2, w_rot):
    """Even-stage update: follow J^T r per waypoint (no scene access)."""
    traj_view = obj.Trajectory(configs, 1.0)
    g = obj.grad_pose(traj_view, path, chain, w_rot=w_rot, start_fixed=form.start_fixed)
    free = form.free_block(configs)
    free += eta2 * form.free_block(g)
    return configs


def _feasibility_step(configs, dt, chain, scene, form, weights, eta1, smooth_relaxation, start_fixed):
    """Odd-stage update: metric-preconditioned feasibility descent.

    Both gradients pass through the metric inverse so a localized push
    spreads smoothly over the trajectory. The smoothness component is
    damped by `smooth_relaxation`: the metric is that term's exact Hessian,
    so the undamped preconditioned direction is a full Newton jump to the
    smoothness minimizer; taken at full strength against the alternating
    pose updates it caps tracking accuracy near eta1 * lambda2 instead of
    letting the pose stage converge."""
    traj_view = obj.Trajectory(configs, dt)
    free = form.free_block(configs)
    g = (smooth_relaxation * weights.lambda2) * (form.apply_A(free) + form.b)
    if weights.lambda1 > 0.0 and len(scene) > 0 and traj_view.n >= 2:
        g_obs = obj.grad_obs(traj_view, chain, scene, start_fixed=start_fixed)
        g = g + weights.lambda1 * form.free_block(g_obs)
    free -= eta1 * form.solve_metric(g)
    return configs


def _combined_step(configs, path, dt, chain, scene, form, weights, params):
    """Single-stage ablation: all three step-scaled gradients applied at once
    through one metric solve. Running the pose correction through the metric
    inverse suppresses its per-waypoint components, which is precisely the
    conflict the two-stage split avoids."""
    traj_view = obj.Trajectory(configs, dt)
    start_fixed = form.start_fixed
    free = form.free_block(configs)
    g_pose = obj.grad_pose(traj_view, path, chain, w_rot=params.w_rot, start_fixed=start_fixed)
    g = params.eta2 * form.free_block(g_pose)
    g = g - (params.eta1 * params.smooth_relaxation * weights.lambda2) * (form.apply_A(free) + form.b)
    if weights.lambda1 > 0.0 and len(scene) > 0 and traj_view.n >= 2:
        g_obs = obj.grad_obs(traj_view, chain, scene, start_fixed=start_fixed)
        g = g - (params.eta1 * weights.lambda1) * form.free_block(g_obs)
    free += form.solve_metric(g)
    return configs


def tsgd_round(traj, path, chain, scene, form, params, threshold=None, cost_to_beat=float("inf")):
    """Run one fixed-length round of two-stage updates.

    Returns the lowest-cost iterate that passed the constraint gate, or the
    lowest-cost iterate overall (flagged infeasible) when none passed.
    `cost_to_beat` lets a caller skip gate checks for iterates that cannot
    improve on an incumbent anyway.
    """
    if len(path) != traj.configs.shape[0]:
        raise ValueError("trajectory and path lengths differ")
    weights = params.weights(traj.n)
    start_fixed = form.start_fixed
    configs = traj.configs.copy()
    dt = traj.dt

    check_bar = cost_to_beat
    best_feasible = None
    best_feasible_cost = float("inf")
    best_feasible_report = None
    best_any = configs.copy()
    best_any_cost = float("inf")
    trace = []
    feasible_costs = []
    n_checks = 0

    def consider(current):
        nonlocal best_feasible, best_feasible_cost, best_feasible_report
        nonlocal best_any, best_any_cost, check_bar, n_checks
        cost = obj.total_cost(
            obj.Trajectory(current, dt), path, chain, scene, weights, form=form, w_rot=params.w_rot
        )
        trace.append(cost)
        if cost < best_any_cost:
            best_any = current.copy()
            best_any_cost = cost
        if cost < check_bar:
            report = check_constraints(
                obj.Trajectory(current, dt), path, chain, scene, params, threshold=threshold
            )
            n_checks += 1
            if report.feasible:
                best_feasible = current.copy()
                best_feasible_cost = cost
                best_feasible_report = report
                feasible_costs.append(cost)
                check_bar = cost

    consider(configs)
    for it in range(1, params.tsgd_iterations + 1):
        if params.disable_tsgd:
            configs = _combined_step(configs, path, dt, chain, scene, form, weights, params)
        elif it % 2 == 1:
            configs = _feasibility_step(
                configs, dt, chain, scene, form, weights, params.eta1,
                params.smooth_relaxation, start_fixed,
            )
        else:
            configs = _pose_step(configs, path, chain, form, params.eta2, params.w_rot)
        free = form.free_block(configs)
        if np.any(free < chain.lower) or np.any(free > chain.upper):
            configs = smooth_projection(
                obj.Trajectory(configs, dt), chain, form,
                alpha=params.projection_alpha, max_rounds=params.projection_rounds,
            ).configs
        consider(configs)

    if best_feasible is not None:
        out, out_cost, feasible, report = best_feasible, best_feasible_cost, True, best_feasible_report
    else:
        out, out_cost, feasible, report = best_any, best_any_cost, False, None
    stats = {
        "iterations": params.tsgd_iterations,
        "waypoints": traj.configs.shape[0],
        "checks": n_checks,
    }
    return TsgdResult(
        trajectory=obj.Trajectory(out, dt),
        cost=out_cost,
        feasible=feasible,
        report=report,
        trace=trace,
        best_feasible_costs=feasible_costs,
        stats=stats,
    )
