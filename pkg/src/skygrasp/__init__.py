"""Desk-scale simulator and library for onboard-perception aerial grasping.

Everything runs from synthetic depth frames on a deterministic logical
clock: SE(3) math in NED, a ray-cast depth renderer with a mask oracle,
point-cloud grasp planning with symmetry completion, 1-point RANSAC target
fusion, a pick-and-place mission state machine, a calibrated pose-noise
model standing in for visual SLAM, and trajectory evaluation (Umeyama
alignment, ATE, RPE).
"""

from .archetypes import ARCHETYPES, HARDWARE_TOTAL, make_scenario
from .camera import (
    DEFAULT_INTRINSICS,
    CameraIntrinsics,
    DepthImage,
    PrimitiveShape,
    SegmentationMask,
    back_project_mask,
    render_depth,
    render_mask,
)
from .cloud import PointCloud, centroid, principal_axes
from .errors import SkygraspError
from .fusion import FusedTarget, TargetEstimate, fuse_window, ransac_fuse
from .mission import MissionConfig, MissionState, MissionStatus, Setpoint
from .planner import GraspPlan, PlannerParams, complete_by_symmetry, plan_grasp
from .scenario import NoiseModel, ScenarioConfig, load_scenario, scenario_from_dict
from .se3 import Pose, UnitQuaternion, compose, inverse, relative_pose
from .sim import RunLog, batch_run, evaluate_grasp, run_scenario
from .trajeval import Trajectory, associate, ate, rpe_translational, umeyama_align

__version__ = "0.1.0"

__all__ = [
    "ARCHETYPES",
    "HARDWARE_TOTAL",
    "make_scenario",
    "DEFAULT_INTRINSICS",
    "CameraIntrinsics",
    "DepthImage",
    "PrimitiveShape",
    "SegmentationMask",
    "back_project_mask",
    "render_depth",
    "render_mask",
    "PointCloud",
    "centroid",
    "principal_axes",
    "SkygraspError",
    "FusedTarget",
    "TargetEstimate",
    "fuse_window",
    "ransac_fuse",
    "MissionConfig",
    "MissionState",
    "MissionStatus",
    "Setpoint",
    "GraspPlan",
    "PlannerParams",
    "complete_by_symmetry",
    "plan_grasp",
    "NoiseModel",
    "ScenarioConfig",
    "load_scenario",
    "scenario_from_dict",
    "Pose",
    "UnitQuaternion",
    "compose",
    "inverse",
    "relative_pose",
    "RunLog",
    "batch_run",
    "evaluate_grasp",
    "run_scenario",
    "Trajectory",
    "associate",
    "ate",
    "rpe_translational",
    "umeyama_align",
    "__version__",
]
