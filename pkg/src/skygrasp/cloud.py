"""Point-cloud primitives used by the grasp planner.

Clouds are world-frame (N, 3) arrays in meters, NED convention, so the
"lowest" physical points are the ones with the largest z.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCloudError, InsufficientPointsError
from .se3 import Pose, transform_points

_TIE_REL_TOL = 1e-9
_VERTICAL = np.array([0.0, 0.0, 1.0])


@dataclass
class PointCloud:
    points: np.ndarray  # (N, 3) float64
    timestamp: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("non-finite points")
        self.points = pts

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class PrincipalAxes:
    """Orthonormal frame ordered by descending variance, right-handed."""

    axes: np.ndarray  # (3, 3), rows are unit axes
    variances: np.ndarray  # (3,) descending, m^2
    origin: np.ndarray  # centroid used


def centroid(c: PointCloud) -> np.ndarray:
    if len(c) == 0:
        raise EmptyCloudError("centroid of empty cloud")
    return c.points.mean(axis=0)


def _canonical_sign(axis: np.ndarray) -> np.ndarray:
    # Flip so the largest-magnitude component is positive; deterministic.
    i = int(np.argmax(np.abs(axis)))
    return -axis if axis[i] < 0 else axis


def principal_axes(c: PointCloud) -> PrincipalAxes:
    if len(c) < 2:
        raise InsufficientPointsError("principal axes need at least 2 points")
    mu = centroid(c)
    centered = c.points - mu
    cov = centered.T @ centered / len(c)
    evals, evecs = np.linalg.eigh(cov)  # ascending
    order = np.argsort(evals)[::-1]
    evals = np.maximum(evals[order], 0.0)
    vecs = evecs[:, order].T  # rows
    tie = _TIE_REL_TOL * max(np.trace(cov), 1e-300)
    # Near-degenerate top eigenvalues: prefer the candidate closest to vertical
    # so the planner behaves deterministically on near-symmetric objects. The
    # candidate set is the whole tied eigen-subspace, so the closest-to-vertical
    # member is the normalized projection of vertical onto that subspace.
    n_tied = 1
    while n_tied < 3 and evals[0] - evals[n_tied] < tie:
        n_tied += 1
    if n_tied > 1:
        proj = (vecs[:n_tied] @ _VERTICAL) @ vecs[:n_tied]
        if np.linalg.norm(proj) > 1e-9:
            first_cand = proj / np.linalg.norm(proj)
            # re-span the tied subspace starting from the vertical-most member
            rest = [v for v in vecs[:n_tied]]
            new_rows = [first_cand]
            for v in rest:
                w = v - sum((v @ u) * u for u in new_rows)
                if np.linalg.norm(w) > 1e-9 and len(new_rows) < n_tied:
                    new_rows.append(w / np.linalg.norm(w))
            vecs[:n_tied] = np.stack(new_rows)
    first = _canonical_sign(vecs[0])
    second = vecs[1] - (vecs[1] @ first) * first
    n2 = np.linalg.norm(second)
    if n2 < 1e-12:
        # collinear cloud: complete a frame deterministically
        second = np.cross(first, _VERTICAL)
        if np.linalg.norm(second) < 1e-6:
            second = np.cross(first, np.array([1.0, 0.0, 0.0]))
        second /= np.linalg.norm(second)
    else:
        second /= n2
    second = _canonical_sign(second)
    third = np.cross(first, second)
    axes = np.stack([first, second, third])
    return PrincipalAxes(axes=axes, variances=evals, origin=mu)


def slab_points(
    c: PointCloud, plane_point: np.ndarray, plane_normal: np.ndarray, half_thickness: float
) -> PointCloud:
    """Points within half_thickness of the plane, timestamp preserved."""
    if len(c) == 0:
        raise EmptyCloudError("slab of empty cloud")
    if half_thickness <= 0:
        raise ValueError("half_thickness must be positive")
    n = np.asarray(plane_normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    dist = np.abs((c.points - np.asarray(plane_point)) @ n)
    return PointCloud(c.points[dist <= half_thickness], timestamp=c.timestamp)


def base_slice(c: PointCloud, slice_height: float) -> PointCloud:
    """Lowest physical points: NED z within slice_height of the cloud maximum z."""
    if len(c) == 0:
        raise EmptyCloudError("base slice of empty cloud")
    z_max = c.points[:, 2].max()
    keep = c.points[:, 2] >= z_max - slice_height
    return PointCloud(c.points[keep], timestamp=c.timestamp)


def transform_cloud(c: PointCloud, p: Pose) -> PointCloud:
    return PointCloud(transform_points(p, c.points), timestamp=c.timestamp)
