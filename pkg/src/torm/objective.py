"""Objective terms over a waypoint-parameterized trajectory.

Three terms make up the total cost: the squared weighted pose residual
against the target path, the workspace clearance penalty integrated along
body-point arc length, and the squared joint-velocity smoothness term. The
smoothness term also exists as an explicit quadratic form (A, b, c0) whose
positive-definite variant preconditions the feasibility updates.

Sign conventions: `grad_pose` returns J^T r, the *descent* direction of the
pose term (its negation is the true gradient); `grad_obs` and `grad_smooth`
return ascent gradients, so feasibility updates subtract them.
"""

from dataclasses import dataclass
import numpy as np

from . import kinematics as kin
from . import rotations as rot
from . import workspace as ws

_STATIONARY_EPS = 1e-8


@dataclass
class Trajectory:
    """Joint configurations q_0..q_n paired one-to-one with the path poses."""

    configs: np.ndarray   # (n+1, d)
    dt: float = 1.0       # seconds between consecutive waypoints

    def __post_init__(self):
        self.configs = np.asarray(self.configs, dtype=float)
        if self.configs.ndim != 2 or self.configs.shape[0] < 2:
            raise ValueError("trajectory needs at least two waypoints (n >= 1)")
        if not np.all(np.isfinite(self.configs)):
            raise ValueError("trajectory contains non-finite values")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def n(self):
        return self.configs.shape[0] - 1

    @property
    def d(self):
        return self.configs.shape[1]

    def copy(self):
        return Trajectory(self.configs.copy(), self.dt)


class PathSpec:
    """The sampled end-effector path x_0..x_n (positions + unit quaternions)."""

    def __init__(self, positions, orientations, spacing=None, w_rot=0.17):
        self.positions = np.asarray(positions, dtype=float)
        self.orientations = np.asarray(orientations, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("positions must be (n+1, 3)")
        if self.orientations.shape != (self.positions.shape[0], 4):
            raise ValueError("orientations must be (n+1, 4)")
        norms = np.linalg.norm(self.orientations, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("path orientations must be unit quaternions")
        self.spacing = spacing
        self.w_rot = w_rot
        if spacing is not None:
            steps = self.step_distances()
            if steps.size and np.any(steps > 1.1 * spacing):
                raise ValueError("consecutive path poses exceed the spacing bound")

    def __len__(self):
        return self.positions.shape[0]

    @property
    def n(self):
        return len(self) - 1

    def pose(self, i):
        return kin.Pose(self.positions[i], self.orientations[i])

    def step_distances(self):
        """Weighted pose distance between consecutive waypoints."""
        dp = np.linalg.norm(np.diff(self.positions, axis=0), axis=1)
        dq = rot.multiply(self.orientations[1:], rot.conjugate(self.orientations[:-1]))
        dr = np.linalg.norm(rot.to_rotvec(dq), axis=1)
        return dp + self.w_rot * dr


@dataclass(frozen=True)
class ObjectiveWeights:
    """Regularization constants for the obstacle and smoothness terms."""

    lambda1: float = 1.8
    lambda2: float = 0.05

    def __post_init__(self):
        if self.lambda1 < 0.0 or self.lambda2 < 0.0:
            raise ValueError("weights must be non-negative")

    @classmethod
    def defaults(cls, n):
        return cls(lambda1=1.8, lambda2=5.0 / (n + 1))


class SmoothnessForm:
    """The smoothness term as 0.5 xi^T A xi + xi^T b + c0 over the free block.

    A is block-diagonal per joint with one shared symmetric tridiagonal
    block, the squared forward-difference operator over the free variables
    scaled by 1/dt^2. With a fixed start, q_0 folds into b and c0 and the
    free block is q_1..q_n; A is positive definite and the preconditioner
    is its exact inverse. With a free start all of q_0..q_n are free and A
    is positive SEMI-definite (constant trajectories cost nothing), so the
    preconditioner is the Moore-Penrose inverse: preconditioned smoothing
    then pulls toward the trajectory mean instead of injecting a spurious
    drift toward some anchor.
    """

    def __init__(self, n, d, dt, start_fixed, q0=None):
        if n < 1:
            raise ValueError("need n >= 1 waypoint steps")
        if start_fixed and q0 is None:
            raise ValueError("start_fixed requires the fixed configuration q0")
        self.n = int(n)
        self.d = int(d)
        self.dt = float(dt)
        self.start_fixed = bool(start_fixed)
        self.q0 = None if q0 is None else np.asarray(q0, dtype=float)

        s = 1.0 / self.dt**2
        self.n_free = self.n if start_fixed else self.n + 1
        self.off = -s
        diag = np.full(self.n_free, 2.0 * s)
        diag[-1] = s
        if start_fixed:
            self.b = np.zeros((self.n_free, self.d))
            self.b[0] = -s * self.q0
            self.c0 = 0.5 * s * float(self.q0 @ self.q0)
        else:
            diag[0] = s
            self.b = np.zeros((self.n_free, self.d))
            self.c0 = 0.0
        self.diag = diag
        self._inverse = np.linalg.inv(self.A_dense()) if start_fixed else np.linalg.pinv(self.A_dense())

    def free_block(self, configs):
        """The rows of (n+1, d) configs subject to optimization."""
        return configs[1:] if self.start_fixed else configs

    def set_free(self, configs, free):
        if self.start_fixed:
            configs[1:] = free
        else:
            configs[:] = free
        return configs

    def apply_A(self, X):
        """A @ X for the exact quadratic form, X shaped (n_free, d)."""
        Y = self.diag[:, None] * X
        Y[:-1] += self.off * X[1:]
        Y[1:] += self.off * X[:-1]
        return Y

    def solve_metric(self, X):
        """The preconditioner applied to X, (n_free, d): A^-1 X for a fixed
        start, the Moore-Penrose A^+ X when the start is free."""
        return self._inverse @ X

    def quadratic_value(self, free):
        """0.5 xi^T A xi + xi^T b + c0 for a free block (n_free, d)."""
        return 0.5 * float(np.sum(free * self.apply_A(free))) + float(np.sum(free * self.b)) + self.c0

    def A_dense(self):
        """The shared per-joint tridiagonal block as a dense matrix (tests, oracles)."""
        A = np.diag(self.diag)
        idx = np.arange(self.n_free - 1)
        A[idx, idx + 1] = self.off
        A[idx + 1, idx] = self.off
        return A



def build_smoothness(n, d, dt, start_fixed, q0=None):
    """Smoothness quadratic form for an (n+1)-waypoint, d-joint trajectory."""
    return SmoothnessForm(n, d, dt, start_fixed, q0)


def _check_lengths(traj, path):
    if len(path) != traj.configs.shape[0]:
        raise ValueError(
            f"trajectory has {traj.configs.shape[0]} waypoints but the path has {len(path)}"
        )


def f_pose(traj, path, chain, w_rot=0.17):
    """0.5 * sum of squared weighted pose residuals along the trajectory."""
    _check_lengths(traj, path)
    pos, quat = kin.fk_batch(chain, traj.configs)
    res = kin.pose_residual_batch(path.positions, path.orientations, pos, rot.normalize(quat), w_rot)
    return 0.5 * float(np.sum(res * res))


def grad_pose(traj, path, chain, w_rot=0.17, start_fixed=False):
    """Per-waypoint descent direction J^T r of the pose term, (n+1, d).

    Row 0 is zeroed when the start configuration is fixed."""
    _check_lengths(traj, path)
    pos, quat = kin.fk_batch(chain, traj.configs)
    res = kin.pose_residual_batch(path.positions, path.orientations, pos, rot.normalize(quat), w_rot)
    J = kin.scaled_jacobian_batch(chain, traj.configs, w_rot)
    g = np.einsum("nij,ni->nj", J, res)
    if start_fixed:
        g[0] = 0.0
    return g


def f_obs(traj, chain, scene):
    """Clearance penalty integrated along each body point's arc length."""
    if len(scene) == 0 or chain.n_spheres == 0:
        return 0.0
    pts = kin.body_points_batch(chain, traj.configs)        # (N, P, 3)
    D = ws.sdf_eval(scene, pts.reshape(-1, 3)).reshape(pts.shape[:2]) - chain._sphere_radii
    c, _ = ws.obstacle_cost(D, scene.epsilon)
    seg = np.linalg.norm(pts[1:] - pts[:-1], axis=-1)       # (N-1, P)
    return float(np.sum(0.5 * (c[1:] + c[:-1]) * seg))


def grad_obs(traj, chain, scene, start_fixed=False):
    """Functional gradient of the obstacle term, (n+1, d).

    The workspace gradient at each body point is ||x'|| [(I - x^ x^T) grad_c
    - c kappa] with velocities and curvatures taken from waypoint finite
    differences (central inside, one-sided at the ends); points moving
    slower than the stationary guard contribute nothing."""
    if traj.n < 2:
        raise ValueError("obstacle gradient needs n >= 2 (curvature uses second differences)")
    N = traj.configs.shape[0]
    if len(scene) == 0 or chain.n_spheres == 0:
        return np.zeros((N, chain.d))
    pts = kin.body_points_batch(chain, traj.configs)        # (N, P, 3)

    vel = np.empty_like(pts)
    vel[1:-1] = 0.5 * (pts[2:] - pts[:-2])
    vel[0] = pts[1] - pts[0]
    vel[-1] = pts[-1] - pts[-2]
    acc = np.empty_like(pts)
    acc[1:-1] = pts[2:] - 2.0 * pts[1:-1] + pts[:-2]
    acc[0] = acc[1]
    acc[-1] = acc[-2]

    flat = pts.reshape(-1, 3)
    D = ws.sdf_eval(scene, flat).reshape(pts.shape[:2]) - chain._sphere_radii
    c, dc = ws.obstacle_cost(D, scene.epsilon)
    grad_c = dc[..., None] * ws.sdf_grad(scene, flat).reshape(pts.shape)

    nrm = np.linalg.norm(vel, axis=-1)                      # (N, P)
    moving = nrm >= _STATIONARY_EPS
    safe = np.where(moving, nrm, 1.0)
    xhat = vel / safe[..., None]
    proj_grad = grad_c - xhat * np.sum(xhat * grad_c, axis=-1, keepdims=True)
    kappa = (acc - xhat * np.sum(xhat * acc, axis=-1, keepdims=True)) / safe[..., None] ** 2
    term = safe[..., None] * (proj_grad - c[..., None] * kappa)
    term = np.where(moving[..., None], term, 0.0)

    Jp = kin.body_point_jacobians_batch(chain, traj.configs)  # (N, P, 3, d)
    g = np.einsum("npkd,npk->nd", Jp, term)
    if start_fixed:
        g[0] = 0.0
    return g


def f_smooth(traj, form):
    """0.5 * sum of squared joint-velocity steps, via the quadratic form."""
    if traj.configs.shape != (form.n + 1, form.d):
        raise ValueError("trajectory shape does not match the smoothness form")
    return form.quadratic_value(form.free_block(traj.configs))


def grad_smooth(traj, form):
    """Gradient A xi + b over the free block, (n_free, d)."""
    if traj.configs.shape != (form.n + 1, form.d):
        raise ValueError("trajectory shape does not match the smoothness form")
    free = form.free_block(traj.configs)
    return form.apply_A(free) + form.b


def total_cost(traj, path, chain, scene, weights, form=None, w_rot=0.17):
    """The full objective: pose + lambda1 * obstacle + lambda2 * smoothness.

    The smoothness term uses the quadratic form when one is supplied and the
    direct sum otherwise."""
    value = f_pose(traj, path, chain, w_rot)
    if weights.lambda1 > 0.0:
        value += weights.lambda1 * f_obs(traj, chain, scene)
    if weights.lambda2 > 0.0:
        if form is not None:
            value += weights.lambda2 * f_smooth(traj, form)
        else:
            steps = np.diff(traj.configs, axis=0) / traj.dt
            value += weights.lambda2 * 0.5 * float(np.sum(steps * steps))
    return value
