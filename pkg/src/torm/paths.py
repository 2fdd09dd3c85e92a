"""Built-in end-effector path generators.

Every generator emits waypoints resampled so consecutive weighted pose
distances sit within 10% of the requested spacing (0.005 m-equivalent by
default). Position paths (square, s_curve, polyline) hold the orientation
fixed; the rotation task holds the position fixed and sweeps pitch then yaw.

Corners are honored exactly: straight-line figures resample each segment
separately, which requires every segment to be at least 4.5 spacings long
(shorter segments cannot meet the 10% band and raise a degenerate-geometry
error).
"""

import numpy as np

from . import rotations as rot
from .objective import PathSpec

DEFAULT_SPACING = 0.005

_PLANES = {
    "xy": (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])),
    "xz": (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
    "yz": (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
}


def _embed(points_2d, plane, center):
    u, v = _PLANES[plane]
    pts = np.asarray(points_2d, dtype=float)
    return center + pts[:, :1] * u + pts[:, 1:2] * v


def _resample_segments(vertices, spacing):
    """Piecewise-linear resampling that lands exactly on every vertex.

    Each segment gets round(len/spacing) equal steps; a segment whose own
    step would leave the +-10% band is degenerate geometry."""
    vertices = np.asarray(vertices, dtype=float)
    out = [vertices[0]]
    for a, b in zip(vertices[:-1], vertices[1:]):
        length = float(np.linalg.norm(b - a))
        steps = int(round(length / spacing))
        if steps == 0 or not 0.9 * spacing <= length / steps <= 1.1 * spacing:
            raise ValueError(
                f"segment of length {length:.4f} m cannot be resampled to "
                f"{spacing} m spacing within 10% (needs at least {4.5 * spacing:.4f} m)"
            )
        w = np.arange(1, steps + 1)[:, None] / steps
        out.extend(a + w * (b - a))
    return np.array(out)


def _resample_curve(dense_points, spacing):
    """Arc-length resampling of a densely sampled smooth curve."""
    dense_points = np.asarray(dense_points, dtype=float)
    seg = np.linalg.norm(np.diff(dense_points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    steps = int(round(total / spacing))
    if steps == 0 or not 0.9 * spacing <= total / steps <= 1.1 * spacing:
        raise ValueError(f"curve of length {total:.4f} m is too short for {spacing} m spacing")
    targets = np.linspace(0.0, total, steps + 1)
    out = np.empty((steps + 1, dense_points.shape[1]))
    for k in range(dense_points.shape[1]):
        out[:, k] = np.interp(targets, s, dense_points[:, k])
    return out


def _fixed_orientation(n, orientation):
    return np.broadcast_to(orientation, (n, 4)).copy()


def square(side, center=(0.0, 0.0, 0.0), plane="xy", orientation=None, spacing=DEFAULT_SPACING, w_rot=0.17):
    """Closed square of the given side, traced corner to corner."""
    if side <= 0.0:
        raise ValueError("square side must be positive")
    orientation = rot.IDENTITY if orientation is None else np.asarray(orientation, dtype=float)
    h = side / 2.0
    corners = [(-h, -h), (h, -h), (h, h), (-h, h), (-h, -h)]
    pts = _resample_segments(_embed(corners, plane, np.asarray(center, dtype=float)), spacing)
    return PathSpec(pts, _fixed_orientation(len(pts), orientation), spacing=spacing, w_rot=w_rot)


def s_curve(radius, center=(0.0, 0.0, 0.0), plane="xy", orientation=None, spacing=DEFAULT_SPACING, w_rot=0.17):
    """An "S" made of two half circles of the given radius."""
    if radius <= 0.0:
        raise ValueError("s_curve radius must be positive")
    orientation = rot.IDENTITY if orientation is None else np.asarray(orientation, dtype=float)
    dense = 2000
    # upper half circle from the top point down to the middle, then the
    # mirrored lower half down to the bottom
    phi = np.linspace(0.5 * np.pi, -0.5 * np.pi, dense)
    upper = np.stack([radius * np.cos(phi), radius + radius * np.sin(phi)], axis=1)
    phi = np.linspace(0.5 * np.pi, 1.5 * np.pi, dense)
    lower = np.stack([radius * np.cos(phi), -radius + radius * np.sin(phi)], axis=1)
    pieces = []
    for arc in (upper, lower):
        pts3 = _embed(arc, plane, np.asarray(center, dtype=float))
        res = _resample_curve(pts3, spacing)
        pieces.append(res if not pieces else res[1:])
    pts = np.concatenate(pieces)
    return PathSpec(pts, _fixed_orientation(len(pts), orientation), spacing=spacing, w_rot=w_rot)


def polyline(strokes, center=(0.0, 0.0, 0.0), plane="xy", orientation=None, spacing=DEFAULT_SPACING, w_rot=0.17, scale=1.0):
    """Arbitrary 2-D stroke list traced in order.

    Strokes are connected tip-to-tail with straight bridges so the path
    stays continuous. Every segment (including bridges) must be at least
    4.5 spacings long."""
    orientation = rot.IDENTITY if orientation is None else np.asarray(orientation, dtype=float)
    vertices = []
    for stroke in strokes:
        stroke = np.asarray(stroke, dtype=float) * scale
        if stroke.ndim != 2 or stroke.shape[1] != 2 or stroke.shape[0] < 2:
            raise ValueError("each stroke must be a list of at least two 2-D points")
        if vertices and np.allclose(vertices[-1], stroke[0]):
            vertices.extend(stroke[1:])
        else:
            vertices.extend(stroke)
    pts = _resample_segments(_embed(np.array(vertices), plane, np.asarray(center, dtype=float)), spacing)
    return PathSpec(pts, _fixed_orientation(len(pts), orientation), spacing=spacing, w_rot=w_rot)


def rotation(position=(0.0, 0.0, 0.0), base_orientation=None, amplitude_deg=45.0, spacing=DEFAULT_SPACING, w_rot=0.17):
    """Fixed position; pitch sweeps 0 -> +a -> -a -> 0, then yaw does the same.

    The weighted arc length of a pure rotation is w_rot * |angle|, so the
    sampling density follows the same spacing contract as position paths."""
    if amplitude_deg <= 0.0:
        raise ValueError("amplitude must be positive")
    base = rot.IDENTITY if base_orientation is None else np.asarray(base_orientation, dtype=float)
    position = np.asarray(position, dtype=float)
    amp = np.deg2rad(amplitude_deg)
    legs = []
    for axis in (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])):   # pitch, then yaw
        for a0, a1 in ((0.0, amp), (amp, -amp), (-amp, 0.0)):
            legs.append((axis, a0, a1))
    quats = [rot.multiply(rot.from_axis_angle(legs[0][0], 0.0), base)]
    for axis, a0, a1 in legs:
        length = w_rot * abs(a1 - a0)
        steps = int(round(length / spacing))
        if steps == 0 or not 0.9 * spacing <= length / steps <= 1.1 * spacing:
            raise ValueError("rotation amplitude too small for the requested spacing")
        angles = a0 + (np.arange(1, steps + 1) / steps) * (a1 - a0)
        quats.extend(rot.multiply(rot.from_axis_angle(axis, a), base) for a in angles)
    quats = np.array(quats)
    pts = np.broadcast_to(position, (len(quats), 3)).copy()
    return PathSpec(pts, quats, spacing=spacing, w_rot=w_rot)


def cursive_sample_strokes():
    """A loopy, cursive-like stroke set of about 2.5 m total ink length.

    Stands in for handwriting-style tracing tasks; vertices are spaced
    so the polyline generator's per-segment resampling stays in band."""
    t = np.linspace(0.0, 5.0, 90)
    x = 0.11 * t + 0.035 * np.sin(2.0 * np.pi * t)
    y = 0.075 * np.sin(2.0 * np.pi * t + 0.6) * np.cos(np.pi * t / 5.0)
    stroke1 = np.stack([x, y], axis=1)
    t2 = np.linspace(0.0, 1.0, 24)
    stroke2 = np.stack([0.58 + 0.05 * np.cos(2 * np.pi * t2), 0.12 + 0.05 * np.sin(2 * np.pi * t2)], axis=1)
    return [stroke1.tolist(), stroke2.tolist()]


def generate_path(kind, **params):
    """Dispatch by kind: square, s_curve (alias s-curve), polyline, rotation."""
    kind = kind.replace("-", "_")
    generators = {
        "square": square,
        "s_curve": s_curve,
        "polyline": polyline,
        "rotation": rotation,
    }
    if kind not in generators:
        raise ValueError(f"unknown path kind '{kind}' (choose from {sorted(generators)})")
    return generators[kind](**params)
