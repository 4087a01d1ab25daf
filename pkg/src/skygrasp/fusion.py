"""Robust multi-frame fusion of target point estimates via 1-point RANSAC.

Every estimate is itself a hypothesis, and candidate counts stay small
(tracking horizons are a few hundred frames), so the hypothesis sweep is
exhaustive rather than randomly sampled: exact, O(n^2), and deterministic.
Ties are broken by smaller mean inlier residual, then earlier timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoEstimatesError

DEFAULT_TAU = 0.05  # same order as the pose error the estimates inherit


@dataclass(frozen=True)
class TargetEstimate:
    point: np.ndarray  # world, meters
    timestamp: int

    def __post_init__(self):
        p = np.asarray(self.point, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite estimate")
        object.__setattr__(self, "point", p)


@dataclass(frozen=True)
class FusedTarget:
    point: np.ndarray
    inlier_count: int
    inlier_fraction: float
    residual_rms: float


def ransac_fuse(estimates, tau: float) -> FusedTarget:
    if not estimates:
        raise NoEstimatesError("cannot fuse zero estimates")
    if tau <= 0:
        raise ValueError("tau must be positive")
    pts = np.stack([e.point for e in estimates])
    stamps = np.array([e.timestamp for e in estimates])
    dists = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    inlier_masks = dists <= tau
    counts = inlier_masks.sum(axis=1)
    mean_resid = np.where(inlier_masks, dists, 0.0).sum(axis=1) / counts
    # winner: max inliers, then smaller mean residual, then earlier timestamp
    order = np.lexsort((stamps, mean_resid, -counts))
    best = order[0]
    mask = inlier_masks[best]
    fused = pts[mask].mean(axis=0)
    resid = np.linalg.norm(pts[mask] - fused, axis=1)
    return FusedTarget(
        point=fused,
        inlier_count=int(mask.sum()),
        inlier_fraction=float(mask.sum()) / len(estimates),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


def fuse_window(estimates, tau: float, window: int) -> FusedTarget:
    """ransac_fuse over the most recent `window` estimates (by list position)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    return ransac_fuse(list(estimates)[-window:], tau)
