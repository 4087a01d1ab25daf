"""Zero-shot grasp planning on partial point clouds.

Strategy: complete the partial cloud by a 180-degree rotation about an
estimated vertical symmetry axis, take the principal axes of the completed
cloud, slice a slab through the completed centroid normal to the longest
axis, and grasp at the slab centroid with the fingers closing across the
thin horizontal direction of the slab. The approach direction is always
straight down because the gripper hangs beneath the vehicle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cloud as co
from .camera import CameraIntrinsics, DepthImage, SegmentationMask, back_project_mask
from .cloud import PointCloud
from .errors import EmptyCandidatesError, EmptyCloudError, InsufficientPointsError
from .se3 import Pose

_SKEW_THRESHOLD = 0.15


@dataclass(frozen=True)
class PlannerParams:
    slab_half_thickness: float = 0.015
    base_slice_height: float = 0.02
    min_points: int = 50
    symmetry_mode: str = "rotate180"  # or "off"

    def __post_init__(self):
        if self.slab_half_thickness <= 0 or self.base_slice_height <= 0:
            raise ValueError("planner lengths must be positive")
        if self.min_points < 4:
            raise ValueError("min_points must be >= 4")
        if self.symmetry_mode not in ("rotate180", "off"):
            raise ValueError(f"unknown symmetry_mode {self.symmetry_mode!r}")


@dataclass
class GraspPlan:
    grasp_point: np.ndarray  # world, meters
    closing_axis: np.ndarray  # unit, horizontal: direction fingers close along
    approach: np.ndarray  # unit, always straight down
    candidates: PointCloud
    completed_centroid: np.ndarray
    timestamp: int
    base_points: PointCloud = None  # lowest slice, for ground-clearance checks

    def to_record(self) -> dict:
        return {
            "grasp_point": self.grasp_point.tolist(),
            "closing_axis": self.closing_axis.tolist(),
            "approach": self.approach.tolist(),
            "completed_centroid": self.completed_centroid.tolist(),
            "n_candidates": len(self.candidates),
            "timestamp": self.timestamp,
        }


def _estimate_symmetry_axis_point(partial: PointCloud) -> np.ndarray:
    """Horizontal location of the assumed vertical symmetry axis.

    A camera sees only the near surface, so the raw centroid of a partial
    cloud sits in front of the object's true axis. For a surface that is
    locally an arc of a circle (bottles, cans, balls), the visible-arc
    geometry gives the debias distance in closed form from the cloud's two
    horizontal extents: fit the circle through the chord, then shift the
    centroid to that circle's center. Clouds without a clear front/back
    asymmetry (skew below threshold) keep their centroid as the axis point.
    """
    c = partial.points.mean(axis=0)
    xy = partial.points[:, :2] - c[:2]
    if len(partial) < 4:
        return c
    cov = xy.T @ xy / len(partial)
    evals, evecs = np.linalg.eigh(cov)  # ascending: evecs[:,0] = min variance
    u = evecs[:, 0]  # depth (viewing) direction for a one-sided view
    v = evecs[:, 1]
    su = xy @ u
    sigma = su.std()
    if sigma < 1e-9:
        return c
    skew = float(np.mean(su**3)) / sigma**3
    if abs(skew) < _SKEW_THRESHOLD:
        return c
    # Visible arc: half-chord a across the view, sagitta b along it. The
    # circle through chord and apex has radius r = (a^2 + b^2) / 2b and its
    # center sits r behind the apex, on the tail (positive-skew) side.
    a = 0.5 * float((xy @ v).max() - (xy @ v).min())
    b = float(su.max() - su.min())
    if b < 1e-9 or a < 1e-9:
        return c
    r = (a * a + b * b) / (2.0 * b)
    apex = su.min() if skew > 0 else su.max()
    delta = apex + r if skew > 0 else apex - r
    delta = max(-1.5 * a, min(1.5 * a, delta))
    out = c.copy()
    out[:2] = c[:2] + delta * u
    return out


def complete_by_symmetry(partial: PointCloud) -> PointCloud:
    """Union of the partial cloud and its 180-degree rotation about the
    estimated vertical symmetry axis; output has twice the input size."""
    if len(partial) == 0:
        raise EmptyCloudError("cannot complete empty cloud")
    q = _estimate_symmetry_axis_point(partial)
    rotated = partial.points.copy()
    rotated[:, 0] = 2.0 * q[0] - partial.points[:, 0]
    rotated[:, 1] = 2.0 * q[1] - partial.points[:, 1]
    return PointCloud(np.vstack([partial.points, rotated]), timestamp=partial.timestamp)


def _closing_axis(candidates: PointCloud) -> np.ndarray:
    """Minimum-variance horizontal direction of the candidate points."""
    xy = candidates.points[:, :2]
    xy = xy - xy.mean(axis=0)
    cov = xy.T @ xy / max(len(candidates), 1)
    _, evecs = np.linalg.eigh(cov)  # ascending
    axis2 = evecs[:, 0]
    i = int(np.argmax(np.abs(axis2)))
    if axis2[i] < 0:
        axis2 = -axis2
    return np.array([axis2[0], axis2[1], 0.0])


def plan_grasp(partial: PointCloud, params: PlannerParams = PlannerParams()) -> GraspPlan:
    if len(partial) < params.min_points:
        raise InsufficientPointsError(
            f"need at least {params.min_points} points, got {len(partial)}"
        )
    completed = complete_by_symmetry(partial) if params.symmetry_mode == "rotate180" else partial
    center = co.centroid(completed)
    axes = co.principal_axes(completed)
    normal = axes.axes[0]
    half = params.slab_half_thickness
    candidates = co.slab_points(completed, center, normal, half)
    if len(candidates) == 0:
        candidates = co.slab_points(completed, center, normal, 2.0 * half)
        if len(candidates) == 0:
            raise EmptyCandidatesError("cutting-plane slab missed the cloud twice")
    grasp_point = co.centroid(candidates)
    return GraspPlan(
        grasp_point=grasp_point,
        closing_axis=_closing_axis(candidates),
        approach=np.array([0.0, 0.0, 1.0]),
        candidates=candidates,
        completed_centroid=center,
        timestamp=partial.timestamp,
        base_points=co.base_slice(completed, params.base_slice_height),
    )


def frame_target_estimate(
    d: DepthImage,
    m: SegmentationMask,
    k: CameraIntrinsics,
    cam_pose: Pose,
    params: PlannerParams = PlannerParams(),
):
    """Per-frame target point estimate: back-project the mask, plan a grasp.

    Returns (target_point, plan), or None when the target could not be
    localized this frame (empty mask or too few points) -- a routine,
    non-fatal condition for the mission loop.
    """
    try:
        partial = back_project_mask(d, m, k, cam_pose)
        plan = plan_grasp(partial, params)
    except (EmptyCloudError, InsufficientPointsError, EmptyCandidatesError):
        return None
    return plan.grasp_point, plan
