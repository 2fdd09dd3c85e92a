"""Plain-text file formats for chains, scenes, paths, problems, and
trajectories.

All formats are line oriented: blank lines and `#` comments are ignored,
the first token names the record, and the rest are `key=value` pairs with
comma-separated vectors. Parse failures always name the file and line.

Chain file records:
    joint axis=0,0,1 origin=0.1,0,0 rpy=0,0,0 limits=-1.6,1.6 vel=1.25
    tip origin=0.16,0,0 rpy=0,0,0          (optional, at most once)
    sphere link=2 offset=0.1,0,0 radius=0.06

Scene file records:
    epsilon 0.2
    sphere center=0.5,0,0 radius=0.1
    box center=0.5,0,0.1 rpy=0,0,0 half_extents=0.05,0.07,0.08
    halfspace normal=0,0,1 offset=-0.05

Problem file records:
    chain robots/arm.chain
    scene scenes/table.scene               (optional)
    path generate square side=0.4 center=0.5,0,0.2 plane=yz
    path file paths/square.csv
    start 0.0 0.3 0.0                      (optional fixed start configuration)
    param budget 60                        (any TormParams field)

Bench suite records:
    problem <name> <problem-file>

Trajectory CSV: header `index,time,q0..q{d-1}`, one row per waypoint.
Path CSV: header `index,x,y,z,qw,qx,qy,qz`.
"""

import csv
import dataclasses
import io
import os

import numpy as np

from . import kinematics as kin
from . import paths as path_gen
from . import rotations as rot
from . import workspace as ws
from .explorer import Problem
from .objective import PathSpec, Trajectory
from .optimizer import TormParams


class ParseError(Exception):
    """A schema violation, pointing at the offending file and line."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


def _records(path, text=None):
    if text is None:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_no, line.split()


def _kv(path, line_no, tokens, required, optional=()):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ParseError(path, line_no, f"expected key=value, got '{tok}'")
        key, value = tok.split("=", 1)
        if key in out:
            raise ParseError(path, line_no, f"duplicate key '{key}'")
        out[key] = value
    for key in required:
        if key not in out:
            raise ParseError(path, line_no, f"missing required key '{key}'")
    allowed = set(required) | set(optional)
    for key in out:
        if key not in allowed:
            raise ParseError(path, line_no, f"unknown key '{key}'")
    return out


def _vec(path, line_no, value, size):
    parts = value.split(",")
    if len(parts) != size:
        raise ParseError(path, line_no, f"expected {size} comma-separated numbers, got '{value}'")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ParseError(path, line_no, f"non-numeric vector component in '{value}'") from None


def _num(path, line_no, value):
    try:
        return float(value)
    except ValueError:
        raise ParseError(path, line_no, f"expected a number, got '{value}'") from None


def _orientation(path, line_no, kv):
    if "quat" in kv and "rpy" in kv:
        raise ParseError(path, line_no, "give either quat or rpy, not both")
    if "quat" in kv:
        q = _vec(path, line_no, kv["quat"], 4)
        norm = np.linalg.norm(q)
        if norm < 1e-12:
            raise ParseError(path, line_no, "zero quaternion")
        return q / norm
    if "rpy" in kv:
        r = _vec(path, line_no, kv["rpy"], 3)
        return rot.from_rpy(*r)
    return rot.IDENTITY.copy()


def load_chain(path, text=None):
    """Parse a chain description file into a Chain."""
    joints = []
    spheres = []
    tip_t, tip_q = None, None
    for line_no, tokens in _records(path, text):
        record, rest = tokens[0], tokens[1:]
        if record == "joint":
            kv = _kv(path, line_no, rest, ["axis", "limits", "vel"], ["origin", "rpy", "quat"])
            axis = _vec(path, line_no, kv["axis"], 3)
            norm = np.linalg.norm(axis)
            if norm < 1e-12:
                raise ParseError(path, line_no, "zero joint axis")
            limits = _vec(path, line_no, kv["limits"], 2)
            if not limits[0] < limits[1]:
                raise ParseError(path, line_no, "joint limits must satisfy lower < upper")
            origin = _vec(path, line_no, kv["origin"], 3) if "origin" in kv else np.zeros(3)
            joints.append(
                kin.Joint(
                    origin_t=origin,
                    origin_q=_orientation(path, line_no, kv),
                    axis=axis / norm,
                    lower=float(limits[0]),
                    upper=float(limits[1]),
                    velocity=_num(path, line_no, kv["vel"]),
                )
            )
        elif record == "sphere":
            kv = _kv(path, line_no, rest, ["link", "offset", "radius"])
            try:
                link = int(kv["link"])
            except ValueError:
                raise ParseError(path, line_no, f"link must be an integer, got '{kv['link']}'") from None
            radius = _num(path, line_no, kv["radius"])
            if radius <= 0.0:
                raise ParseError(path, line_no, "sphere radius must be positive")
            spheres.append(kin.BodySphere(link, _vec(path, line_no, kv["offset"], 3), radius))
        elif record == "tip":
            if tip_t is not None:
                raise ParseError(path, line_no, "duplicate tip record")
            kv = _kv(path, line_no, rest, [], ["origin", "rpy", "quat"])
            tip_t = _vec(path, line_no, kv["origin"], 3) if "origin" in kv else np.zeros(3)
            tip_q = _orientation(path, line_no, kv)
        else:
            raise ParseError(path, line_no, f"unknown record '{record}' in chain file")
    if not joints:
        raise ParseError(path, 0, "chain file defines no joints")
    try:
        return kin.Chain(joints, spheres, tip_t=tip_t, tip_q=tip_q)
    except ValueError as exc:
        raise ParseError(path, 0, str(exc)) from None


def load_scene(path, text=None):
    """Parse a scene file into a Scene."""
    obstacles = []
    epsilon = None
    for line_no, tokens in _records(path, text):
        record, rest = tokens[0], tokens[1:]
        if record == "epsilon":
            if len(rest) != 1:
                raise ParseError(path, line_no, "epsilon takes exactly one value")
            epsilon = _num(path, line_no, rest[0])
            if epsilon <= 0.0:
                raise ParseError(path, line_no, "epsilon must be positive")
        elif record == "sphere":
            kv = _kv(path, line_no, rest, ["center", "radius"])
            radius = _num(path, line_no, kv["radius"])
            if radius <= 0.0:
                raise ParseError(path, line_no, "sphere radius must be positive")
            obstacles.append(ws.SphereObstacle(_vec(path, line_no, kv["center"], 3), radius))
        elif record == "box":
            kv = _kv(path, line_no, rest, ["center", "half_extents"], ["rpy", "quat"])
            he = _vec(path, line_no, kv["half_extents"], 3)
            if np.any(he <= 0.0):
                raise ParseError(path, line_no, "box half extents must be positive")
            obstacles.append(
                ws.BoxObstacle(_vec(path, line_no, kv["center"], 3), _orientation(path, line_no, kv), he)
            )
        elif record == "halfspace":
            kv = _kv(path, line_no, rest, ["normal", "offset"])
            n = _vec(path, line_no, kv["normal"], 3)
            norm = np.linalg.norm(n)
            if norm < 1e-12:
                raise ParseError(path, line_no, "zero half-space normal")
            obstacles.append(ws.HalfSpace(n / norm, _num(path, line_no, kv["offset"])))
        else:
            raise ParseError(path, line_no, f"unknown record '{record}' in scene file")
    return ws.Scene(obstacles, epsilon=0.2 if epsilon is None else epsilon)


def _format(x):
    """Shortest round-tripping decimal representation (byte-stable)."""
    return repr(float(x))


def save_path_csv(path_spec, file):
    with open(file, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x", "y", "z", "qw", "qx", "qy", "qz"])
        for i in range(len(path_spec)):
            p = path_spec.positions[i]
            q = path_spec.orientations[i]
            writer.writerow([i] + [_format(v) for v in p] + [_format(v) for v in q])


def load_path_csv(file, spacing=None, w_rot=0.17):
    positions, orientations = [], []
    with open(file, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:8]] != ["index", "x", "y", "z", "qw", "qx", "qy", "qz"]:
            raise ParseError(file, 1, "path CSV must start with header index,x,y,z,qw,qx,qy,qz")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 8:
                raise ParseError(file, line_no, f"expected 8 columns, got {len(row)}")
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError:
                raise ParseError(file, line_no, "non-numeric value in path row") from None
            positions.append(vals[:3])
            orientations.append(vals[3:])
    if len(positions) < 2:
        raise ParseError(file, 0, "path CSV needs at least two waypoints")
    return PathSpec(np.array(positions), np.array(orientations), spacing=spacing, w_rot=w_rot)


def export_trajectory(traj, file):
    """Write a trajectory CSV: index, time, then one column per joint."""
    with open(file, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "time"] + [f"q{j}" for j in range(traj.d)])
        for i, q in enumerate(traj.configs):
            writer.writerow([i, _format(i * traj.dt)] + [_format(v) for v in q])


def load_trajectory(file):
    """Read a trajectory CSV written by export_trajectory."""
    rows = []
    times = []
    with open(file, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["index", "time"]:
            raise ParseError(file, 1, "trajectory CSV must start with header index,time,q0,...")
        width = len(header)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(file, line_no, f"expected {width} columns, got {len(row)}")
            try:
                times.append(float(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError:
                raise ParseError(file, line_no, "non-numeric value in trajectory row") from None
    if len(rows) < 2:
        raise ParseError(file, 0, "trajectory CSV needs at least two waypoints")
    dt = times[1] - times[0] if times[1] > times[0] else 0.1
    return Trajectory(np.array(rows), dt=dt)


_GENERATE_KEYS = {
    "side": float,
    "radius": float,
    "scale": float,
    "spacing": float,
    "w_rot": float,
    "amplitude_deg": float,
    "plane": str,
    "center": "vec3",
    "position": "vec3",
    "orientation": "quat",
    "base_orientation": "quat",
    "strokes": str,
}


def _parse_generate(path, line_no, tokens):
    if not tokens:
        raise ParseError(path, line_no, "path generate needs a kind")
    kind, rest = tokens[0], tokens[1:]
    kwargs = {}
    for tok in rest:
        if "=" not in tok:
            raise ParseError(path, line_no, f"expected key=value, got '{tok}'")
        key, value = tok.split("=", 1)
        if key not in _GENERATE_KEYS:
            raise ParseError(path, line_no, f"unknown path parameter '{key}'")
        conv = _GENERATE_KEYS[key]
        if conv == "vec3":
            kwargs[key] = _vec(path, line_no, value, 3)
        elif conv == "quat":
            q = _vec(path, line_no, value, 4)
            kwargs[key] = q / np.linalg.norm(q)
        elif conv is float:
            kwargs[key] = _num(path, line_no, value)
        else:
            kwargs[key] = value
    if kind.replace("-", "_") == "polyline":
        strokes_file = kwargs.pop("strokes", None)
        if strokes_file is None:
            kwargs["strokes"] = path_gen.cursive_sample_strokes()
        else:
            resolved = os.path.join(os.path.dirname(path), strokes_file)
            kwargs["strokes"] = _load_strokes(resolved)
    try:
        return path_gen.generate_path(kind, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ParseError(path, line_no, f"path generation failed: {exc}") from None


def _load_strokes(file):
    import json

    try:
        with open(file, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(file, 0, f"cannot read strokes file: {exc}") from None


def load_problem(file, text=None):
    """Parse a problem file; referenced chain/scene/path files resolve
    relative to the problem file's directory."""
    base = os.path.dirname(os.path.abspath(file))
    chain = None
    scene = ws.Scene([])
    path_spec = None
    start = None
    overrides = {}
    chain_file = scene_file = path_source = None
    known_fields = {f.name: f for f in dataclasses.fields(TormParams)}

    for line_no, tokens in _records(file, text):
        record, rest = tokens[0], tokens[1:]
        if record == "chain":
            if len(rest) != 1:
                raise ParseError(file, line_no, "chain takes exactly one file path")
            chain_file = rest[0]
            chain = load_chain(os.path.join(base, chain_file))
        elif record == "scene":
            if len(rest) != 1:
                raise ParseError(file, line_no, "scene takes exactly one file path")
            scene_file = rest[0]
            scene = load_scene(os.path.join(base, scene_file))
        elif record == "path":
            if not rest:
                raise ParseError(file, line_no, "path needs 'generate <kind> ...' or 'file <csv>'")
            if rest[0] == "generate":
                path_spec = _parse_generate(file, line_no, rest[1:])
                path_source = " ".join(rest)
            elif rest[0] == "file":
                if len(rest) != 2:
                    raise ParseError(file, line_no, "path file takes exactly one CSV path")
                path_spec = load_path_csv(os.path.join(base, rest[1]))
                path_source = " ".join(rest)
            else:
                raise ParseError(file, line_no, f"unknown path mode '{rest[0]}'")
        elif record == "start":
            try:
                start = np.array([float(v) for v in rest])
            except ValueError:
                raise ParseError(file, line_no, "start must be a list of joint values") from None
        elif record == "param":
            if len(rest) != 2:
                raise ParseError(file, line_no, "param takes a name and a value")
            name, value = rest
            if name not in known_fields:
                raise ParseError(file, line_no, f"unknown parameter '{name}'")
            overrides[name] = _convert_param(file, line_no, known_fields[name], value)
        else:
            raise ParseError(file, line_no, f"unknown record '{record}' in problem file")

    if chain is None:
        raise ParseError(file, 0, "problem file must name a chain")
    if path_spec is None:
        raise ParseError(file, 0, "problem file must define a path")
    params = TormParams(**overrides)
    try:
        return Problem(
            chain=chain,
            scene=scene,
            path=path_spec,
            start=start,
            params=params,
            chain_file=chain_file,
            scene_file=scene_file,
            path_source=path_source,
        )
    except ValueError as exc:
        raise ParseError(file, 0, str(exc)) from None


def _convert_param(path, line_no, field_spec, value):
    text = str(field_spec.type)
    try:
        if "bool" in text:
            if value.lower() in ("true", "1", "yes", "on"):
                return True
            if value.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(value)
        if "int" in text and "| None" not in text:
            return int(value)
        if value.lower() == "none":
            return None
        if "int" in text:
            return int(value)
        return float(value)
    except ValueError:
        raise ParseError(path, line_no, f"bad value '{value}' for parameter '{field_spec.name}'") from None


def save_problem(problem, file):
    """Write a problem file that loads back to an equivalent Problem.

    Requires the problem to carry its source descriptors (chain_file and
    either a generator line or path file reference)."""
    if problem.chain_file is None or problem.path_source is None:
        raise ValueError("problem lacks source descriptors; cannot be written back")
    lines = [f"chain {problem.chain_file}"]
    if problem.scene_file is not None:
        lines.append(f"scene {problem.scene_file}")
    lines.append(f"path {problem.path_source}")
    if problem.start is not None:
        lines.append("start " + " ".join(_format(v) for v in problem.start))
    defaults = TormParams()
    for f in dataclasses.fields(TormParams):
        value = getattr(problem.params, f.name)
        if value != getattr(defaults, f.name):
            lines.append(f"param {f.name} {value}")
    with open(file, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_suite(file, text=None):
    """Parse a bench suite file into [(name, problem_path)] with paths
    resolved relative to the suite file."""
    base = os.path.dirname(os.path.abspath(file))
    entries = []
    for line_no, tokens in _records(file, text):
        if tokens[0] != "problem" or len(tokens) != 3:
            raise ParseError(file, line_no, "suite lines look like: problem <name> <file>")
        entries.append((tokens[1], os.path.join(base, tokens[2])))
    if not entries:
        raise ParseError(file, 0, "suite file lists no problems")
    return entries
