"""Serial revolute-chain model.

Forward kinematics, partial forward kinematics for body spheres, geometric
Jacobians, the Yoshikawa manipulability measure, and a damped-least-squares
random-seed IK solver. All heavy routines have batched variants operating on
``(N, d)`` configuration arrays; the public single-config operations wrap
them.

Link indexing: link 0 is the base frame, link ``j`` (1-based) is the frame
after joint ``j-1``. Body spheres attach to link frames; a sphere on link 0
never moves.
"""

from dataclasses import dataclass
import numpy as np

from . import rotations as rot

_AXIS_TOL = 1e-9


@dataclass(frozen=True)
class Joint:
    """One revolute joint: a fixed transform from the parent link frame,
    then a rotation about `axis` (expressed in the joint frame)."""

    origin_t: np.ndarray  # (3,) translation, m
    origin_q: np.ndarray  # (4,) unit quaternion
    axis: np.ndarray      # (3,) unit vector
    lower: float          # rad
    upper: float          # rad
    velocity: float       # rad/s


@dataclass(frozen=True)
class BodySphere:
    link: int             # 0 = base, j = frame after joint j-1... see module docstring
    offset: np.ndarray    # (3,) in the link frame, m
    radius: float         # m


@dataclass(frozen=True)
class Pose:
    """6-D end-effector pose: position plus unit quaternion."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "orientation", np.asarray(self.orientation, dtype=float))
        if self.position.shape != (3,):
            raise ValueError("pose position must be a 3-vector")
        if self.orientation.shape != (4,):
            raise ValueError("pose orientation must be a quaternion (w, x, y, z)")
        if abs(np.linalg.norm(self.orientation) - 1.0) > 1e-9:
            raise ValueError("pose orientation must be a unit quaternion")


class Chain:
    """Immutable kinematic description of a serial revolute manipulator."""

    def __init__(self, joints, body_spheres=(), tip_t=None, tip_q=None):
        joints = [self._coerce_joint(j) for j in joints]
        if not joints:
            raise ValueError("chain needs at least one joint")
        self.joints = tuple(joints)
        self.d = len(joints)

        self.body_spheres = tuple(self._coerce_sphere(s) for s in body_spheres)
        for s in self.body_spheres:
            if not 0 <= s.link <= self.d:
                raise ValueError(f"body sphere link {s.link} out of range (chain has {self.d + 1} links)")
            if s.radius <= 0.0:
                raise ValueError("body sphere radius must be positive")

        self.tip_t = np.zeros(3) if tip_t is None else np.asarray(tip_t, dtype=float)
        self.tip_q = rot.IDENTITY.copy() if tip_q is None else np.asarray(tip_q, dtype=float)

        # stacked arrays used by the batched routines
        self._origin_t = np.array([j.origin_t for j in joints])
        self._origin_q = np.array([j.origin_q for j in joints])
        self._origin_q_identity = [bool(np.allclose(j.origin_q, rot.IDENTITY)) for j in joints]
        self._axes = np.array([j.axis for j in joints])
        self.lower = np.array([j.lower for j in joints])
        self.upper = np.array([j.upper for j in joints])
        self.velocity = np.array([j.velocity for j in joints])
        self._sphere_links = np.array([s.link for s in self.body_spheres], dtype=int)
        self._sphere_offsets = (
            np.array([s.offset for s in self.body_spheres])
            if self.body_spheres
            else np.zeros((0, 3))
        )
        self._sphere_radii = np.array([s.radius for s in self.body_spheres])
        # sphere pairs eligible for the self-collision test: links two or more apart
        pairs = [
            (i, k)
            for i in range(len(self.body_spheres))
            for k in range(i + 1, len(self.body_spheres))
            if abs(self.body_spheres[i].link - self.body_spheres[k].link) >= 2
        ]
        self._self_pairs = np.array(pairs, dtype=int).reshape(-1, 2)

    @staticmethod
    def _coerce_joint(j):
        origin_t = np.asarray(j.origin_t, dtype=float)
        origin_q = np.asarray(j.origin_q, dtype=float)
        axis = np.asarray(j.axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > _AXIS_TOL:
            raise ValueError(f"joint axis {axis} is not unit length")
        if abs(np.linalg.norm(origin_q) - 1.0) > _AXIS_TOL:
            raise ValueError("joint origin quaternion is not unit length")
        if not j.lower < j.upper:
            raise ValueError(f"joint limits [{j.lower}, {j.upper}] must satisfy lower < upper")
        return Joint(origin_t, origin_q, axis, float(j.lower), float(j.upper), float(j.velocity))

    @staticmethod
    def _coerce_sphere(s):
        return BodySphere(int(s.link), np.asarray(s.offset, dtype=float), float(s.radius))

    @property
    def n_spheres(self):
        return len(self.body_spheres)

    def check_config(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.d,):
            raise ValueError(f"configuration has shape {q.shape}, chain has {self.d} joints")
        if not np.all(np.isfinite(q)):
            raise ValueError("configuration contains non-finite values")
        return q

    def clamp(self, q):
        return np.clip(q, self.lower, self.upper)


def _link_frames(chain, Q):
    """World frames of links 0..d for a batch of configurations Q (N, d).

    Returns (T, R) with T (N, d+1, 3) and R (N, d+1, 4). Entry j is the frame
    after joint j-1; entry 0 is the base. The rotation centre of joint j is
    T[:, j+1] and its world axis is R[:, j+1] applied to the local axis (the
    joint's own rotation leaves both unchanged).
    """
    Q = np.asarray(Q, dtype=float)
    N = Q.shape[0]
    T = np.empty((N, chain.d + 1, 3))
    R = np.empty((N, chain.d + 1, 4))
    t = np.zeros((N, 3))
    r = np.broadcast_to(rot.IDENTITY, (N, 4)).copy()
    T[:, 0] = t
    R[:, 0] = r
    for j in range(chain.d):
        t = t + rot.rotate(r, chain._origin_t[j])
        if not chain._origin_q_identity[j]:
            r = rot.multiply(r, chain._origin_q[j])
        r = rot.multiply(r, rot.from_axis_angle(chain._axes[j], Q[:, j]))
        T[:, j + 1] = t
        R[:, j + 1] = r
    return T, R


def fk_batch(chain, Q):
    """End-effector poses for configurations Q (N, d) -> positions (N, 3), quats (N, 4)."""
    T, R = _link_frames(chain, Q)
    pos = T[:, -1] + rot.rotate(R[:, -1], chain.tip_t)
    quat = rot.multiply(R[:, -1], chain.tip_q)
    return pos, quat


def fk(chain, q):
    """Pose of the final link frame, composing joint transforms in order."""
    q = chain.check_config(q)
    pos, quat = fk_batch(chain, q[None, :])
    return Pose(pos[0], rot.normalize(quat[0]))


def body_points_batch(chain, Q):
    """World positions of every body sphere centre, (N, P, 3) in declaration order."""
    T, R = _link_frames(chain, Q)
    if chain.n_spheres == 0:
        return np.zeros((np.asarray(Q).shape[0], 0, 3))
    Tl = T[:, chain._sphere_links]            # (N, P, 3)
    Rl = R[:, chain._sphere_links]            # (N, P, 4)
    return Tl + rot.rotate(Rl, chain._sphere_offsets)


def body_points(chain, q):
    """World (position, radius) for every body sphere at configuration q."""
    q = chain.check_config(q)
    pts = body_points_batch(chain, q[None, :])[0]
    return [(pts[i], chain.body_spheres[i].radius) for i in range(chain.n_spheres)]


def _jacobian_parts(chain, Q):
    """Joint origins (N, d, 3), world axes (N, d, 3), ee positions (N, 3), quats (N, 4)."""
    T, R = _link_frames(chain, Q)
    origins = T[:, 1:]                                  # joint j rotates about T[:, j+1]
    axes = rot.rotate(R[:, 1:], chain._axes)            # (N, d, 3)
    ee_pos = T[:, -1] + rot.rotate(R[:, -1], chain.tip_t)
    ee_quat = rot.multiply(R[:, -1], chain.tip_q)
    return origins, axes, ee_pos, ee_quat


def jacobian_batch(chain, Q):
    """Geometric Jacobians (N, 6, d); rows 0-2 linear, rows 3-5 angular."""
    origins, axes, ee_pos, _ = _jacobian_parts(chain, Q)
    lin = rot.cross(axes, ee_pos[:, None, :] - origins)  # (N, d, 3)
    J = np.concatenate([lin, axes], axis=-1)            # (N, d, 6)
    return np.swapaxes(J, 1, 2)


def jacobian(chain, q):
    """6 x d geometric Jacobian of the end-effector at q."""
    q = chain.check_config(q)
    return jacobian_batch(chain, q[None, :])[0]


def body_point_jacobians_batch(chain, Q):
    """Linear-velocity Jacobians of every body point, (N, P, 3, d).

    Columns for joints at or beyond a sphere's link are zero (those joints
    do not move the point).
    """
    Q = np.asarray(Q, dtype=float)
    N = Q.shape[0]
    P = chain.n_spheres
    if P == 0:
        return np.zeros((N, P, 3, chain.d))
    origins, axes, _, _ = _jacobian_parts(chain, Q)
    pts = body_points_batch(chain, Q)                       # (N, P, 3)
    lin = rot.cross(axes[:, None, :, :], pts[:, :, None, :] - origins[:, None, :, :])
    # joint j moves the sphere only if j < link  (sphere link L is after joint L-1)
    mask = np.arange(chain.d)[None, :] < chain._sphere_links[:, None]  # (P, d)
    lin = lin * mask[None, :, :, None]
    return np.swapaxes(lin, 2, 3)


def body_point_jacobian(chain, q, sphere_index):
    """3 x d Jacobian of body sphere `sphere_index` at q."""
    q = chain.check_config(q)
    if not 0 <= sphere_index < chain.n_spheres:
        raise ValueError(f"sphere index {sphere_index} out of range")
    return body_point_jacobians_batch(chain, q[None, :])[0, sphere_index]


def _planar_normal(axes):
    """Common world axis for a planar chain at these configs, or None.

    axes has shape (N, d, 3); the chain counts as planar when every joint
    axis in every sampled configuration is parallel to the first one.
    """
    ref = axes[0, 0]
    dots = np.abs(axes @ ref)
    if np.all(dots > 1.0 - 1e-9):
        return ref
    return None


def manipulability_batch(chain, Q):
    """Yoshikawa measure per configuration, (N,)."""
    Q = np.asarray(Q, dtype=float)
    J = jacobian_batch(chain, Q)
    origins, axes, _, _ = _jacobian_parts(chain, Q)
    normal = _planar_normal(axes) if chain.d < 6 else None
    if normal is not None:
        # planar chain: keep the in-plane position rows and, if a third row
        # fits, the rotation about the plane normal
        e = np.zeros(3)
        e[int(np.argmin(np.abs(normal)))] = 1.0
        u = np.cross(normal, e)
        u = u / np.linalg.norm(u)
        v = np.cross(normal, u)
        rows = [u @ J[:, :3, :], v @ J[:, :3, :]]
        if chain.d >= 3:
            rows.append(normal @ J[:, 3:, :])
        Jr = np.stack(rows, axis=1)                       # (N, k, d), k = min(d, 3)
        gram = Jr @ np.swapaxes(Jr, 1, 2)
    elif chain.d >= 6:
        gram = J @ np.swapaxes(J, 1, 2)
    else:
        gram = np.swapaxes(J, 1, 2) @ J
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None))


def manipulability(chain, q):
    """sqrt(det(J J^T)), reduced to the achievable task rows for planar chains.

    Returns 0 at kinematic singularities (tiny negative determinants clamp)."""
    q = chain.check_config(q)
    return float(manipulability_batch(chain, q[None, :])[0])


def random_config(chain, rng):
    """Uniform sample within the joint limits."""
    return rng.uniform(chain.lower, chain.upper)


def pose_residual(target, actual, w_rot=0.17):
    """6-D pose error: position difference stacked on the scaled rotation log.

    Rows 0-2 are target.position - actual.position; rows 3-5 are
    w_rot * rotvec(R_target R_actual^T).
    """
    dp = target.position - actual.position
    dr = rot.relative_rotvec(target.orientation, actual.orientation)
    return np.concatenate([dp, w_rot * dr])


def pose_residual_batch(t_pos, t_quat, a_pos, a_quat, w_rot=0.17):
    dp = t_pos - a_pos
    dr = rot.relative_rotvec(t_quat, a_quat)
    return np.concatenate([dp, w_rot * dr], axis=-1)


def scaled_jacobian_batch(chain, Q, w_rot=0.17):
    """Jacobians whose angular rows carry the rotation weight, so J^T e is the
    descent direction of the squared weighted pose residual."""
    J = jacobian_batch(chain, Q)
    J[:, 3:, :] *= w_rot
    return J


@dataclass(frozen=True)
class IkParams:
    """Damped-least-squares solver knobs."""

    max_iterations: int = 200
    damping: float = 0.05
    step_clamp: float = 0.5
    tolerance: float = 1e-6
    w_rot: float = 0.17


def solve_ik_batch(chain, t_pos, t_quat, seeds, params=IkParams()):
    """Damped least squares from a batch of seeds.

    Targets may be a single pose ((3,), (4,)) or one per seed ((B, 3),
    (B, 4)). Returns (solutions (B, d), success (B,), iteration_rows) where
    iteration_rows counts candidate-iterations actually executed (for cost
    accounting). Solutions are clamped to joint limits every iteration.
    """
    Q = np.array(seeds, dtype=float)
    if Q.ndim == 1:
        Q = Q[None, :]
    B = Q.shape[0]
    t_pos = np.broadcast_to(np.asarray(t_pos, dtype=float), (B, 3))
    t_quat = np.broadcast_to(np.asarray(t_quat, dtype=float), (B, 4))
    Q = np.clip(Q, chain.lower, chain.upper)
    eye6 = np.eye(6) * params.damping**2
    idx = np.arange(B)
    iteration_rows = 0
    for _ in range(params.max_iterations):
        pos, quat = fk_batch(chain, Q[idx])
        res = pose_residual_batch(t_pos[idx], t_quat[idx], pos, rot.normalize(quat), params.w_rot)
        err = np.linalg.norm(res, axis=-1)
        still = err > params.tolerance
        idx = idx[still]
        if idx.size == 0:
            break
        res = res[still]
        iteration_rows += idx.size
        J = scaled_jacobian_batch(chain, Q[idx], params.w_rot)
        A = J @ np.swapaxes(J, 1, 2) + eye6
        y = np.linalg.solve(A, res[..., None])
        dq = (np.swapaxes(J, 1, 2) @ y)[..., 0]
        dq = np.clip(dq, -params.step_clamp, params.step_clamp)
        Q[idx] = np.clip(Q[idx] + dq, chain.lower, chain.upper)
    pos, quat = fk_batch(chain, Q)
    res = pose_residual_batch(t_pos, t_quat, pos, rot.normalize(quat), params.w_rot)
    success = np.linalg.norm(res, axis=-1) <= params.tolerance
    return Q, success, iteration_rows


def solve_ik(chain, target, seed, params=IkParams()):
    """Damped-least-squares IK from `seed`; returns the configuration or None.

    On success the weighted pose residual of the result is below
    params.tolerance and the result lies within the joint limits."""
    seed = chain.check_config(np.asarray(seed, dtype=float))
    Q, ok, _ = solve_ik_batch(chain, target.position, target.orientation, seed[None, :], params)
    if ok[0]:
        return Q[0]
    return None
