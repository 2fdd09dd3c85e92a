"""Workspace obstacles: analytic signed distances, the smoothed clearance
cost, and collision queries for sphere-approximated robot bodies.

A Scene is a flat union of primitives (spheres, oriented boxes, half-spaces
for tables and floors). Signed distances are exact per primitive and the
scene distance is their minimum (negative inside). All queries accept a
single point (3,) or a batch (M, 3).
"""

from dataclasses import dataclass
import numpy as np

from . import rotations as rot
from . import kinematics as kin

# Sentinel distance reported for an empty scene ("nothing anywhere near").
NO_OBSTACLE_DISTANCE = 1e9


@dataclass(frozen=True)
class SphereObstacle:
    center: np.ndarray
    radius: float

    def signed_distance(self, x):
        return np.linalg.norm(x - self.center, axis=-1) - self.radius

    def gradient(self, x):
        delta = x - self.center
        norm = np.linalg.norm(delta, axis=-1, keepdims=True)
        safe = np.where(norm > 1e-12, norm, 1.0)
        g = delta / safe
        # at the exact centre the direction is undefined; pick +z
        return np.where(norm > 1e-12, g, np.array([0.0, 0.0, 1.0]))


@dataclass(frozen=True)
class BoxObstacle:
    center: np.ndarray
    orientation: np.ndarray  # unit quaternion, box -> world
    half_extents: np.ndarray

    def _local(self, x):
        return rot.rotate(rot.conjugate(self.orientation), x - self.center)

    def signed_distance(self, x):
        p = self._local(x)
        q = np.abs(p) - self.half_extents
        outside = np.linalg.norm(np.clip(q, 0.0, None), axis=-1)
        inside = np.clip(np.max(q, axis=-1), None, 0.0)
        return outside + inside

    def gradient(self, x):
        p = self._local(x)
        q = np.abs(p) - self.half_extents
        pos = np.clip(q, 0.0, None)
        norm = np.linalg.norm(pos, axis=-1, keepdims=True)
        out_dir = np.sign(p) * pos / np.where(norm > 1e-12, norm, 1.0)
        # inside: move along the axis closest to a face
        face = np.argmax(q, axis=-1)
        in_dir = np.zeros_like(p)
        np.put_along_axis(in_dir, face[..., None], 1.0, axis=-1)
        in_dir = in_dir * np.sign(p + np.where(p == 0.0, 1.0, 0.0))
        g_local = np.where(norm > 1e-12, out_dir, in_dir)
        return rot.rotate(self.orientation, g_local)


@dataclass(frozen=True)
class HalfSpace:
    """Everything behind the plane n.x = offset (against the normal) is solid."""

    normal: np.ndarray   # outward unit normal
    offset: float

    def signed_distance(self, x):
        return x @ self.normal - self.offset

    def gradient(self, x):
        return np.broadcast_to(self.normal, np.asarray(x).shape).copy()


class Scene:
    """Immutable set of obstacle primitives plus the clearance band width."""

    def __init__(self, obstacles=(), epsilon=0.2):
        obstacles = tuple(self._coerce(o) for o in obstacles)
        if epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        self.obstacles = obstacles
        self.epsilon = float(epsilon)

    @staticmethod
    def _coerce(o):
        if isinstance(o, SphereObstacle):
            if o.radius <= 0.0:
                raise ValueError("sphere obstacle radius must be positive")
            return SphereObstacle(np.asarray(o.center, dtype=float), float(o.radius))
        if isinstance(o, BoxObstacle):
            he = np.asarray(o.half_extents, dtype=float)
            if np.any(he <= 0.0):
                raise ValueError("box half extents must be positive")
            quat = np.asarray(o.orientation, dtype=float)
            if abs(np.linalg.norm(quat) - 1.0) > 1e-9:
                raise ValueError("box orientation must be a unit quaternion")
            return BoxObstacle(np.asarray(o.center, dtype=float), quat, he)
        if isinstance(o, HalfSpace):
            n = np.asarray(o.normal, dtype=float)
            if abs(np.linalg.norm(n) - 1.0) > 1e-9:
                raise ValueError("half-space normal must be a unit vector")
            return HalfSpace(n, float(o.offset))
        raise TypeError(f"unknown obstacle type {type(o).__name__}")

    def __len__(self):
        return len(self.obstacles)


def sdf_eval(scene, x):
    """Scene signed distance: min over primitives, negative inside.

    Empty scenes report NO_OBSTACLE_DISTANCE."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if not scene.obstacles:
        out = np.full(pts.shape[0], NO_OBSTACLE_DISTANCE)
        return float(out[0]) if single else out
    dists = np.stack([o.signed_distance(pts) for o in scene.obstacles])
    out = np.min(dists, axis=0)
    return float(out[0]) if single else out


def sdf_grad(scene, x):
    """Gradient of sdf_eval; the nearest primitive's gradient, first-listed on ties."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if not scene.obstacles:
        out = np.zeros_like(pts)
        return out[0] if single else out
    dists = np.stack([o.signed_distance(pts) for o in scene.obstacles])
    grads = np.stack([o.gradient(pts) for o in scene.obstacles])
    pick = np.argmin(dists, axis=0)
    out = np.take_along_axis(grads, pick[None, :, None], axis=0)[0]
    return out[0] if single else out


def obstacle_cost(distance_minus_radius, epsilon):
    """Smoothed clearance penalty and its derivative.

    c(D) = -D + eps/2 inside (D < 0), a quadratic ramp (D - eps)^2 / (2 eps)
    in the clearance band, and 0 beyond it; C^1 at both knots. Accepts
    scalars or arrays and returns (cost, dcost/dD) of the same shape.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    D = np.asarray(distance_minus_radius, dtype=float)
    inside = D < 0.0
    band = (D >= 0.0) & (D <= epsilon)
    cost = np.where(inside, -D + 0.5 * epsilon, 0.0)
    cost = np.where(band, (D - epsilon) ** 2 / (2.0 * epsilon), cost)
    dcost = np.where(inside, -1.0, 0.0)
    dcost = np.where(band, (D - epsilon) / epsilon, dcost)
    if D.ndim == 0:
        return float(cost), float(dcost)
    return cost, dcost


@dataclass
class ClearanceReport:
    """Signed clearances of every body sphere at one configuration."""

    clearances: np.ndarray          # (P,) sdf minus sphere radius, m
    worst_index: int                # offending sphere (argmin clearance), -1 if no spheres
    self_pairs: list                # sphere index pairs overlapping across links >= 2 apart

    @property
    def worst_clearance(self):
        return float(self.clearances[self.worst_index]) if self.worst_index >= 0 else float("inf")

    @property
    def in_collision(self):
        return self.worst_index >= 0 and self.clearances[self.worst_index] < 0.0

    @property
    def self_collision(self):
        return len(self.self_pairs) > 0

    @property
    def collision_free(self):
        return not self.in_collision and not self.self_collision


def body_clearances_batch(scene, chain, Q):
    """Signed clearance of every sphere at every configuration, (N, P)."""
    pts = kin.body_points_batch(chain, Q)           # (N, P, 3)
    N, P = pts.shape[:2]
    if P == 0:
        return np.zeros((N, 0))
    d = sdf_eval(scene, pts.reshape(-1, 3)).reshape(N, P)
    return d - chain._sphere_radii


def self_collision_pairs_batch(chain, Q):
    """Per configuration, the list of overlapping non-adjacent sphere pairs."""
    pts = kin.body_points_batch(chain, Q)
    pairs = chain._self_pairs
    if pairs.shape[0] == 0:
        return [[] for _ in range(pts.shape[0])]
    delta = pts[:, pairs[:, 0]] - pts[:, pairs[:, 1]]
    dist = np.linalg.norm(delta, axis=-1)           # (N, npairs)
    limit = chain._sphere_radii[pairs[:, 0]] + chain._sphere_radii[pairs[:, 1]]
    hits = dist < limit
    return [[tuple(pairs[k]) for k in np.flatnonzero(hits[i])] for i in range(pts.shape[0])]


def check_collision(scene, chain, q):
    """Clearance report for one configuration: external clearances per sphere
    plus self-collision pairs between spheres on links two or more apart."""
    q = chain.check_config(q)
    clear = body_clearances_batch(scene, chain, q[None, :])[0]
    worst = int(np.argmin(clear)) if clear.size else -1
    pairs = self_collision_pairs_batch(chain, q[None, :])[0]
    return ClearanceReport(clear, worst, pairs)
