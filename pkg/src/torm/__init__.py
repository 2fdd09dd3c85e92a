"""Trajectory optimization for redundant manipulators tracking dense 6-D
end-effector paths: alternating feasibility/pose gradient refinement inside
an anytime exploration loop over greedy random-IK seeds."""

from .kinematics import (
    BodySphere,
    Chain,
    IkParams,
    Joint,
    Pose,
    body_point_jacobian,
    body_points,
    fk,
    jacobian,
    manipulability,
    pose_residual,
    random_config,
    solve_ik,
)
from .workspace import (
    BoxObstacle,
    ClearanceReport,
    HalfSpace,
    Scene,
    SphereObstacle,
    check_collision,
    obstacle_cost,
    sdf_eval,
    sdf_grad,
)
from .objective import (
    ObjectiveWeights,
    PathSpec,
    SmoothnessForm,
    Trajectory,
    build_smoothness,
    f_obs,
    f_pose,
    f_smooth,
    grad_obs,
    grad_pose,
    grad_smooth,
    total_cost,
)
from .optimizer import (
    FeasibilityReport,
    TormParams,
    TsgdResult,
    check_constraints,
    manipulability_threshold,
    smooth_projection,
    tsgd_round,
)
from .explorer import (
    HistoryEntry,
    Problem,
    SolveResult,
    interpolate,
    seed_trajectory,
    subsample,
    torm_solve,
)
from .metrics import Metrics, compute_metrics, pose_error, trajectory_length
from .paths import generate_path

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
