"""Evaluation metrics for a solved trajectory."""

from dataclasses import dataclass
import numpy as np

from . import kinematics as kin
from . import rotations as rot


@dataclass
class Metrics:
    """Per-run quality numbers; min/max collapse to the average for a single run."""

    pose_error: float                 # average weighted pose distance over waypoints
    pose_error_min: float
    pose_error_max: float
    trajectory_length: float          # sum of C-space Euclidean steps, rad
    initial_solution_time: float      # s
    planning_time: float              # s


def pose_error(traj, path, chain, w_rot=0.17):
    """Average over waypoints of ||dp|| + w_rot * ||dr|| with dr the
    unweighted rotation-vector difference."""
    if len(path) != traj.configs.shape[0]:
        raise ValueError("trajectory and path lengths differ")
    pos, quat = kin.fk_batch(chain, traj.configs)
    quat = rot.normalize(quat)
    dp = np.linalg.norm(path.positions - pos, axis=1)
    dr = np.linalg.norm(rot.relative_rotvec(path.orientations, quat), axis=1)
    return float(np.mean(dp + w_rot * dr))


def trajectory_length(traj):
    """Total C-space Euclidean path length, rad."""
    return float(np.sum(np.linalg.norm(np.diff(traj.configs, axis=0), axis=1)))


def compute_metrics(traj, path, chain, w_rot=0.17, initial_solution_time=float("nan"), planning_time=float("nan")):
    """Single-run metrics; aggregation across runs happens in the bench layer."""
    err = pose_error(traj, path, chain, w_rot)
    return Metrics(
        pose_error=err,
        pose_error_min=err,
        pose_error_max=err,
        trajectory_length=trajectory_length(traj),
        initial_solution_time=initial_solution_time,
        planning_time=planning_time,
    )
