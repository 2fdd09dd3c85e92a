"""Quaternion and rotation-vector helpers.

Quaternions are scalar-first ``(w, x, y, z)`` unit quaternions stored in
numpy arrays of shape ``(..., 4)``. Every function broadcasts over leading
batch dimensions so the kinematics layer can evaluate whole trajectories at
once. The arithmetic is written out component-wise: these run in the inner
loop of the IK and refinement stages, where generic numpy helpers
(cross/stack/moveaxis) cost more than the math itself.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q):
    return np.asarray(q, dtype=float) / np.linalg.norm(q, axis=-1, keepdims=True)


def multiply(a, b):
    """Hamilton product a * b (rotation a applied after rotation b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = aw * bw - ax * bx - ay * by - az * bz
    out[..., 1] = aw * bx + ax * bw + ay * bz - az * by
    out[..., 2] = aw * by - ax * bz + ay * bw + az * bx
    out[..., 3] = aw * bz + ax * by - ay * bx + az * bw
    return out


def conjugate(q):
    return np.asarray(q, dtype=float) * np.array([1.0, -1.0, -1.0, -1.0])


def rotate(q, v):
    """Rotate vectors v (..., 3) by quaternions q (..., 4).

    v' = v + 2 w (u x v) + 2 u x (u x v) with u the vector part."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., 0]
    ux, uy, uz = q[..., 1], q[..., 2], q[..., 3]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    # t = 2 (u x v)
    tx = 2.0 * (uy * vz - uz * vy)
    ty = 2.0 * (uz * vx - ux * vz)
    tz = 2.0 * (ux * vy - uy * vx)
    out = np.empty(np.broadcast_shapes(q.shape[:-1] + (3,), v.shape))
    out[..., 0] = vx + w * tx + uy * tz - uz * ty
    out[..., 1] = vy + w * ty + uz * tx - ux * tz
    out[..., 2] = vz + w * tz + ux * ty - uy * tx
    return out


def cross(a, b):
    """Component-wise cross product of (..., 3) arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def from_axis_angle(axis, angle):
    """Quaternion for a rotation of `angle` radians about unit `axis`.

    `axis` has shape (..., 3) or (3,); `angle` broadcasts against its batch
    dimensions.
    """
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    half = 0.5 * angle
    s = np.sin(half)
    out = np.empty(np.broadcast_shapes(axis.shape[:-1], angle.shape) + (4,))
    out[..., 0] = np.cos(half)
    out[..., 1] = axis[..., 0] * s
    out[..., 2] = axis[..., 1] * s
    out[..., 3] = axis[..., 2] * s
    return out


def from_rpy(roll, pitch, yaw):
    """Quaternion from fixed-axis roll/pitch/yaw (URDF convention Rz*Ry*Rx)."""
    qx = from_axis_angle(np.array([1.0, 0.0, 0.0]), roll)
    qy = from_axis_angle(np.array([0.0, 1.0, 0.0]), pitch)
    qz = from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw)
    return multiply(qz, multiply(qy, qx))


def to_matrix(q):
    """3x3 rotation matrices for quaternions (..., 4) -> (..., 3, 3)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (3, 3))
    out[..., 0, 0] = 1 - 2 * (y * y + z * z)
    out[..., 0, 1] = 2 * (x * y - w * z)
    out[..., 0, 2] = 2 * (x * z + w * y)
    out[..., 1, 0] = 2 * (x * y + w * z)
    out[..., 1, 1] = 1 - 2 * (x * x + z * z)
    out[..., 1, 2] = 2 * (y * z - w * x)
    out[..., 2, 0] = 2 * (x * z - w * y)
    out[..., 2, 1] = 2 * (y * z + w * x)
    out[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def to_rotvec(q):
    """Axis-angle logarithm with angle in [0, pi] (shortest representative)."""
    q = np.asarray(q, dtype=float)
    # canonicalize to w >= 0 so the returned angle is the short way around
    q = np.where(q[..., :1] < 0.0, -q, q)
    w = np.clip(q[..., 0], -1.0, 1.0)
    v = q[..., 1:]
    sin_half = np.linalg.norm(v, axis=-1)
    angle = 2.0 * np.arctan2(sin_half, w)
    # angle / sin(angle/2) with the small-angle limit 2/w
    scale = np.where(sin_half > 1e-12, angle / np.where(sin_half > 1e-12, sin_half, 1.0), 2.0)
    return v * scale[..., None]


def relative_rotvec(target, actual):
    """Rotation vector of R_target * R_actual^T."""
    return to_rotvec(multiply(target, conjugate(actual)))


def slerp(q0, q1, t):
    """Spherical interpolation from q0 to q1 at fractions t (scalar or array)."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    t = np.asarray(t, dtype=float)
    dot = np.sum(q0 * q1, axis=-1, keepdims=True)
    q1 = np.where(dot < 0.0, -q1, q1)
    dot = np.abs(dot)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_theta = np.sin(theta)
    tb = t[..., None] if t.ndim else t
    near = sin_theta < 1e-9
    w0 = np.where(near, 1.0 - tb, np.sin((1.0 - tb) * theta) / np.where(near, 1.0, sin_theta))
    w1 = np.where(near, tb, np.sin(tb * theta) / np.where(near, 1.0, sin_theta))
    return normalize(w0 * q0 + w1 * q1)
