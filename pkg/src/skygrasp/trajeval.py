"""Trajectory evaluation: Umeyama alignment, ATE, translational RPE.

Implements the standard closed-form least-squares alignment (SVD
construction with determinant-sign correction) in rigid and similarity
modes, nearest-timestamp association, and the usual error metrics for
comparing an estimated trajectory against a reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    InsufficientSamplesError,
    NoOverlapError,
)
from .se3 import Pose, UnitQuaternion, compose, relative_pose


@dataclass
class Trajectory:
    """Time-ordered (timestamp_seconds, Pose) samples."""

    samples: list

    def __post_init__(self):
        times = [t for t, _ in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.samples)

    def positions(self) -> np.ndarray:
        return np.array([p.translation for _, p in self.samples]).reshape(-1, 3)

    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    def transformed(self, rotation: UnitQuaternion, translation: np.ndarray, scale: float = 1.0):
        out = []
        for t, p in self.samples:
            q = rotation.multiply(p.rotation)
            tr = scale * rotation.rotate(p.translation) + translation
            out.append((t, Pose(q, tr)))
        return Trajectory(out)


@dataclass(frozen=True)
class AlignmentResult:
    rotation: UnitQuaternion
    translation: np.ndarray
    scale: float
    rmse_after: float


def umeyama_align(estimate: Trajectory, reference: Trajectory, mode: str = "rigid") -> AlignmentResult:
    """Least-squares transform mapping estimate positions onto the reference."""
    if mode not in ("rigid", "similarity"):
        raise ValueError(f"unknown alignment mode {mode!r}")
    if len(estimate) != len(reference):
        raise ValueError("trajectories must be associated (equal length) before alignment")
    x = estimate.positions()
    y = reference.positions()
    n = x.shape[0]
    if n < 3:
        raise DegenerateGeometryError("need at least 3 positions to align")
    mu_x = x.mean(axis=0)
    mu_y = y.mean(axis=0)
    xc = x - mu_x
    yc = y - mu_y
    cov = yc.T @ xc / n
    u, d, vt = np.linalg.svd(cov)
    if d[1] < 1e-12 * max(d[0], 1e-300):
        raise DegenerateGeometryError("collinear point sets cannot be aligned")
    s = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[2, 2] = -1.0
    rot = u @ s @ vt
    if mode == "similarity":
        var_x = (xc**2).sum() / n
        scale = float(np.trace(np.diag(d) @ s) / var_x)
    else:
        scale = 1.0
    trans = mu_y - scale * rot @ mu_x
    resid = y - (scale * (x @ rot.T) + trans)
    rmse = float(np.sqrt((resid**2).sum(axis=1).mean()))
    return AlignmentResult(
        rotation=UnitQuaternion.from_matrix(rot),
        translation=trans,
        scale=scale,
        rmse_after=rmse,
    )


def associate(a: Trajectory, b: Trajectory, max_dt: float):
    """Nearest-timestamp pairing within max_dt; returns (a', b') of equal length."""
    if len(a) == 0 or len(b) == 0:
        raise NoOverlapError("empty trajectory")
    tb = b.times()
    # nearest b sample per a sample, then resolve collisions on the same
    # b sample by keeping the closest pairing
    best_for_j = {}
    for i, (ta, _) in enumerate(a.samples):
        j = int(np.searchsorted(tb, ta))
        cand = [jj for jj in (j - 1, j) if 0 <= jj < len(tb)]
        jj = min(cand, key=lambda x: abs(tb[x] - ta))
        dt = abs(tb[jj] - ta)
        if dt <= max_dt and (jj not in best_for_j or dt < best_for_j[jj][1]):
            best_for_j[jj] = (i, dt)
    pairs = sorted((i, j) for j, (i, _) in best_for_j.items())
    if not pairs:
        raise NoOverlapError("no timestamp pairs within max_dt")
    a_out = Trajectory([a.samples[i] for i, _ in pairs])
    b_out = Trajectory([b.samples[j] for _, j in pairs])
    return a_out, b_out


def rpe_translational(estimate: Trajectory, reference: Trajectory, delta: int = 1) -> dict:
    """Per-step relative pose error statistics over translation."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    n = len(estimate)
    if len(reference) != n:
        raise ValueError("trajectories must be associated (equal length)")
    if n <= delta:
        raise InsufficientSamplesError(f"need more than {delta} samples, got {n}")
    series = []
    for i in range(n - delta):
        q_i, q_j = estimate.samples[i][1], estimate.samples[i + delta][1]
        p_i, p_j = reference.samples[i][1], reference.samples[i + delta][1]
        err = relative_pose(relative_pose(q_i, q_j), relative_pose(p_i, p_j))
        series.append(float(np.linalg.norm(err.translation)))
    arr = np.array(series)
    return {
        "series": arr,
        "mean": float(arr.mean()),
        "max": float(arr.max()),
        "rmse": float(np.sqrt((arr**2).mean())),
    }


def ate(estimate: Trajectory, reference: Trajectory, mode: str = "rigid") -> dict:
    """Absolute trajectory error after Umeyama alignment."""
    n = len(estimate)
    if len(reference) != n:
        raise ValueError("trajectories must be associated (equal length)")
    align = umeyama_align(estimate, reference, mode=mode)
    aligned = align.scale * (estimate.positions() @ align.rotation.as_matrix().T) + align.translation
    resid = np.linalg.norm(reference.positions() - aligned, axis=1)
    return {
        "rmse": float(np.sqrt((resid**2).mean())),
        "mean": float(resid.mean()),
        "max": float(resid.max()),
        "alignment": align,
    }
