"""Rigid-body math in the NED (north-east-down) convention.

Vectors are plain ``numpy`` arrays of shape (3,): x north, y east, z down.
Rotations are stored as unit quaternions, renormalized after every
composition and canonicalized to w >= 0 so that pose equality is testable
bitwise after canonicalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-9


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([float(x), float(y), float(z)], dtype=np.float64)


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion (w, x, y, z), double-cover canonicalized to w >= 0."""

    w: float
    x: float
    y: float
    z: float

    @staticmethod
    def identity() -> "UnitQuaternion":
        return UnitQuaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def normalized(w: float, x: float, y: float, z: float) -> "UnitQuaternion":
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0:
            raise ValueError("zero quaternion cannot be normalized")
        if abs(n - 1.0) > 1e-13:  # skip near-unit division so file round trips stay bit-exact
            w, x, y, z = w / n, x / n, y / n, z / n
        if w < 0.0 or (w == 0.0 and (x < 0.0 or (x == 0.0 and (y < 0.0 or (y == 0.0 and z < 0.0))))):
            w, x, y, z = -w, -x, -y, -z
        return UnitQuaternion(w, x, y, z)

    @staticmethod
    def from_axis_angle(axis: np.ndarray, angle: float) -> "UnitQuaternion":
        axis = np.asarray(axis, dtype=np.float64)
        n = float(np.linalg.norm(axis))
        if n == 0.0:
            raise ValueError("zero rotation axis")
        half = 0.5 * angle
        s = math.sin(half) / n
        return UnitQuaternion.normalized(math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)

    @staticmethod
    def from_yaw(yaw: float) -> "UnitQuaternion":
        """Rotation about the NED down axis; positive yaw turns north toward east."""
        return UnitQuaternion.normalized(math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw))

    def multiply(self, other: "UnitQuaternion") -> "UnitQuaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuaternion.normalized(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion.normalized(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: np.ndarray) -> np.ndarray:
        return self.as_matrix() @ np.asarray(v, dtype=np.float64)

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )

    @staticmethod
    def from_matrix(m: np.ndarray) -> "UnitQuaternion":
        m = np.asarray(m, dtype=np.float64)
        t = np.trace(m)
        if t > 0.0:
            s = math.sqrt(t + 1.0) * 2.0
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        return UnitQuaternion.normalized(w, x, y, z)

    def yaw(self) -> float:
        """Heading angle about the down axis (ZYX convention)."""
        return math.atan2(
            2.0 * (self.w * self.z + self.x * self.y),
            1.0 - 2.0 * (self.y * self.y + self.z * self.z),
        )

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def angle_to(self, other: "UnitQuaternion") -> float:
        d = abs(self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z)
        return 2.0 * math.acos(min(1.0, d))


@dataclass(frozen=True)
class Pose:
    """Rigid transform: world point = rotation * body point + translation."""

    rotation: UnitQuaternion
    translation: np.ndarray  # (3,) meters, NED

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(t)):
            raise ValueError("non-finite translation")
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(UnitQuaternion.identity(), np.zeros(3))

    @staticmethod
    def from_yaw_translation(yaw: float, t: np.ndarray) -> "Pose":
        return Pose(UnitQuaternion.from_yaw(yaw), np.asarray(t, dtype=np.float64))


def compose(a: Pose, b: Pose) -> Pose:
    return Pose(a.rotation.multiply(b.rotation), a.rotation.rotate(b.translation) + a.translation)


def inverse(p: Pose) -> Pose:
    rinv = p.rotation.conjugate()
    return Pose(rinv, -rinv.rotate(p.translation))


def transform_point(p: Pose, v: np.ndarray) -> np.ndarray:
    return p.rotation.rotate(v) + p.translation


def transform_points(p: Pose, pts: np.ndarray) -> np.ndarray:
    """Apply a pose to an (N, 3) array of points."""
    pts = np.asarray(pts, dtype=np.float64)
    return pts @ p.rotation.as_matrix().T + p.translation


def relative_pose(a: Pose, b: Pose) -> Pose:
    return compose(inverse(a), b)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi
