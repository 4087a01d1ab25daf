"""Pinhole camera model, ray-cast depth renderer, and mask oracle.

The camera frame is the usual pinhole convention: x right (image u),
y down (image v), z forward along the optical axis. Depth is z-depth
(distance along the optical axis, not ray length), stored as 16-bit
millimeters with 0 marking an invalid pixel. The renderer intersects
analytic primitives (box, cylinder, sphere, capsule) plus a ground plane,
standing in for an OAK-D-class stereo depth stream; the mask oracle
stands in for a learned segmenter by labeling pixels whose nearest hit
belongs to the designated target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCloudError, PairingError, RejectedInputError
from .se3 import Pose, inverse, transform_points

KINDS = ("box", "cylinder", "sphere", "capsule")


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    depth_min: float = 0.2
    depth_max: float = 10.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside image")
        if not (0 < self.depth_min < self.depth_max):
            raise ValueError("invalid depth range")


# Plausible OAK-D-class defaults; configuration, never a hard-coded assumption.
DEFAULT_INTRINSICS = CameraIntrinsics(fx=380.0, fy=380.0, cx=320.0, cy=200.0, width=640, height=400)


@dataclass
class DepthImage:
    width: int
    height: int
    data: np.ndarray  # (height, width) uint16 millimeters, 0 = invalid
    timestamp: int = 0

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.uint16)
        if self.data.shape != (self.height, self.width):
            raise ValueError("depth data shape mismatch")


@dataclass
class SegmentationMask:
    width: int
    height: int
    bitmap: np.ndarray  # (height, width) bool
    timestamp: int = 0

    def __post_init__(self):
        self.bitmap = np.ascontiguousarray(self.bitmap, dtype=bool)
        if self.bitmap.shape != (self.height, self.width):
            raise ValueError("mask shape mismatch")


@dataclass(frozen=True)
class PrimitiveShape:
    """Analytic solid centered on its local origin, placed by a world pose.

    dimensions: box -> (ex, ey, ez) full extents; cylinder/capsule ->
    (radius, height) where height is the cylindrical segment length;
    sphere -> (radius,).
    """

    kind: str
    dimensions: tuple
    pose: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        dims = tuple(float(d) for d in self.dimensions)
        n_expected = {"box": 3, "cylinder": 2, "sphere": 1, "capsule": 2}[self.kind]
        if len(dims) != n_expected:
            raise ValueError(f"{self.kind} needs {n_expected} dimensions, got {len(dims)}")
        if any(d <= 0 for d in dims):
            raise ValueError("all dimensions must be positive")
        object.__setattr__(self, "dimensions", dims)

    @property
    def centroid(self) -> np.ndarray:
        return self.pose.translation

    def vertical_half_extent(self) -> float:
        """Support of the shape along the world down axis (half its world height)."""
        r = self.pose.rotation.as_matrix()
        down = r.T @ np.array([0.0, 0.0, 1.0])  # world down expressed in local frame
        if self.kind == "box":
            ex, ey, ez = self.dimensions
            return 0.5 * (abs(down[0]) * ex + abs(down[1]) * ey + abs(down[2]) * ez)
        if self.kind == "sphere":
            return self.dimensions[0]
        radius, height = self.dimensions
        c = abs(down[2])
        s = math.sqrt(max(0.0, 1.0 - c * c))
        if self.kind == "cylinder":
            return 0.5 * height * c + radius * s
        return 0.5 * height * c + radius  # capsule

    def top_z(self) -> float:
        return self.pose.translation[2] - self.vertical_half_extent()

    def base_z(self) -> float:
        return self.pose.translation[2] + self.vertical_half_extent()


def back_project_pixel(u: float, v: float, depth: float, k: CameraIntrinsics) -> np.ndarray:
    if not (0 <= u < k.width and 0 <= v < k.height):
        raise RejectedInputError(f"pixel ({u}, {v}) outside {k.width}x{k.height} image")
    if not (k.depth_min <= depth <= k.depth_max):
        raise RejectedInputError(f"depth {depth} outside [{k.depth_min}, {k.depth_max}]")
    return np.array([(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth])


def project_point(p_cam: np.ndarray, k: CameraIntrinsics) -> tuple:
    """Forward pinhole projection of a camera-frame point; (u, v) may be off-image."""
    z = p_cam[2]
    if z <= 0:
        raise RejectedInputError("point behind camera")
    return (k.cx + k.fx * p_cam[0] / z, k.cy + k.fy * p_cam[1] / z)


def back_project_mask(
    d: DepthImage, m: SegmentationMask, k: CameraIntrinsics, cam_pose: Pose
):
    """Lift masked valid-depth pixels into a world-frame point cloud."""
    from .cloud import PointCloud

    if (d.width, d.height) != (m.width, m.height):
        raise PairingError("depth/mask dimension mismatch")
    if d.timestamp != m.timestamp:
        raise PairingError("depth/mask timestamp mismatch")
    z = d.data.astype(np.float64) * 1e-3
    valid = m.bitmap & (d.data > 0) & (z >= k.depth_min) & (z <= k.depth_max)
    vs, us = np.nonzero(valid)
    if us.size == 0:
        raise EmptyCloudError("no masked pixels with valid depth")
    zz = z[vs, us]
    pts_cam = np.stack([(us - k.cx) * zz / k.fx, (vs - k.cy) * zz / k.fy, zz], axis=1)
    return PointCloud(transform_points(cam_pose, pts_cam), timestamp=m.timestamp)


def _ray_dirs(k: CameraIntrinsics) -> np.ndarray:
    """Unnormalized camera-frame ray directions, one per pixel, z component 1.

    Parameterized so the ray parameter t equals z-depth directly.
    """
    us = (np.arange(k.width) - k.cx) / k.fx
    vs = (np.arange(k.height) - k.cy) / k.fy
    uu, vv = np.meshgrid(us, vs)
    return np.stack([uu, vv, np.ones_like(uu)], axis=-1)


_INF = np.inf


def _hit_sphere(o, d, center, radius):
    oc = o - center
    a = np.einsum("...i,...i->...", d, d)
    b = 2.0 * np.einsum("...i,i->...", d, oc)
    c = float(oc @ oc) - radius * radius
    disc = b * b - 4.0 * a * c
    t = np.full(d.shape[:-1], _INF)
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t0 = (-b - sq) / (2.0 * a)
    t1 = (-b + sq) / (2.0 * a)
    near = np.where(t0 > 0, t0, np.where(t1 > 0, t1, _INF))
    t[ok] = near[ok]
    return t


def _hit_box(o_l, d_l, extents):
    half = np.asarray(extents) * 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d_l
    t_lo = (-half - o_l) * inv
    t_hi = (half - o_l) * inv
    t_near = np.nanmin(np.stack([t_lo, t_hi]), axis=0).max(axis=-1)
    t_far = np.nanmax(np.stack([t_lo, t_hi]), axis=0).min(axis=-1)
    # Rays parallel to a slab: inside -> +/-inf handled by min/max; outside -> miss
    parallel_miss = np.any((np.abs(d_l) < 1e-15) & (np.abs(o_l) > half), axis=-1)
    hit = (t_far >= t_near) & (t_far > 0) & ~parallel_miss
    t = np.where(t_near > 0, t_near, t_far)
    return np.where(hit, t, _INF)


def _hit_finite_cylinder_side(o_l, d_l, radius, half_h):
    ox, oy = o_l[..., 0], o_l[..., 1]
    dx, dy = d_l[..., 0], d_l[..., 1]
    a = dx * dx + dy * dy
    b = 2.0 * (ox * dx + oy * dy)
    c = ox * ox + oy * oy - radius * radius
    disc = b * b - 4.0 * a * c
    ok = (disc >= 0) & (a > 1e-30)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    best = np.full(a.shape, _INF)
    for sign in (-1.0, 1.0):
        t = (-b + sign * sq) / np.where(ok, 2.0 * a, 1.0)
        z = o_l[..., 2] + t * d_l[..., 2]
        good = ok & (t > 0) & (np.abs(z) <= half_h)
        best = np.where(good & (t < best), t, best)
    return best


def _hit_disc(o_l, d_l, z_plane, radius):
    dz = d_l[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (z_plane - o_l[..., 2]) / dz
        x = o_l[..., 0] + t * d_l[..., 0]
        y = o_l[..., 1] + t * d_l[..., 1]
    good = (np.abs(dz) > 1e-30) & (t > 0) & (x * x + y * y <= radius * radius)
    return np.where(good, t, _INF)


def _hit_sphere_local(o_l, d_l, center_l, radius):
    oc = o_l - center_l
    a = np.einsum("...i,...i->...", d_l, d_l)
    b = 2.0 * np.einsum("...i,...i->...", d_l, oc)
    c = np.einsum("...i,...i->...", oc, oc) - radius * radius
    disc = b * b - 4.0 * a * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t0 = (-b - sq) / (2.0 * a)
    t1 = (-b + sq) / (2.0 * a)
    t = np.where(t0 > 0, t0, np.where(t1 > 0, t1, _INF))
    return np.where(ok, t, _INF)


def intersect_shape(shape: PrimitiveShape, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Smallest positive ray parameter per ray, inf on miss.

    origins broadcastable to dirs' leading shape; dirs (..., 3) world frame.
    """
    inv_pose = inverse(shape.pose)
    r = inv_pose.rotation.as_matrix()
    o_l = origins @ r.T + inv_pose.translation
    d_l = dirs @ r.T
    if shape.kind == "sphere":
        return _hit_sphere_local(o_l, d_l, np.zeros(3), shape.dimensions[0])
    if shape.kind == "box":
        return _hit_box(o_l, d_l, shape.dimensions)
    radius, height = shape.dimensions
    half_h = 0.5 * height
    t = _hit_finite_cylinder_side(o_l, d_l, radius, half_h)
    if shape.kind == "cylinder":
        for zp in (-half_h, half_h):
            t = np.minimum(t, _hit_disc(o_l, d_l, zp, radius))
    else:  # capsule: hemispherical end caps
        for zc in (-half_h, half_h):
            tc = _hit_sphere_local(o_l, d_l, np.array([0.0, 0.0, zc]), radius)
            with np.errstate(invalid="ignore"):
                z = o_l[..., 2] + tc * d_l[..., 2]
            good = np.isfinite(tc) & (np.abs(z) >= half_h)
            t = np.minimum(t, np.where(good, tc, _INF))
    return t


def _scene_depths(shapes, ground_z, k: CameraIntrinsics, cam_pose: Pose):
    """Per-pixel ray parameter for every shape plus the ground plane.

    Returns (t_stack, ground_t): t_stack has one layer per shape.
    """
    dirs_cam = _ray_dirs(k)
    rot = cam_pose.rotation.as_matrix()
    dirs_w = dirs_cam @ rot.T
    origin = cam_pose.translation
    layers = [intersect_shape(s, origin, dirs_w) for s in shapes]
    dz = dirs_w[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        tg = (ground_z - origin[2]) / dz
    tg = np.where((np.abs(dz) > 1e-30) & (tg > 0), tg, _INF)
    return np.stack(layers) if layers else np.zeros((0,) + tg.shape), tg


def render_depth(
    shapes, ground_z: float, k: CameraIntrinsics, cam_pose: Pose, timestamp: int = 0
) -> DepthImage:
    """Ray-cast z-depth image, quantized to millimeters; invalid pixels 0."""
    t_stack, tg = _scene_depths(shapes, ground_z, k, cam_pose)
    t = np.minimum(t_stack.min(axis=0), tg) if t_stack.size else tg
    valid = np.isfinite(t) & (t >= k.depth_min) & (t <= k.depth_max)
    mm = np.where(valid, np.rint(t * 1000.0), 0.0)
    mm = np.clip(mm, 0, 65535).astype(np.uint16)
    return DepthImage(k.width, k.height, mm, timestamp)


def render_mask(
    target: PrimitiveShape, shapes, ground_z: float, k: CameraIntrinsics,
    cam_pose: Pose, timestamp: int = 0,
) -> SegmentationMask:
    """Pixel true iff the nearest scene hit belongs to the target."""
    if not any(s is target for s in shapes):
        raise ValueError("target must be one of shapes")
    idx = next(i for i, s in enumerate(shapes) if s is target)
    t_stack, tg = _scene_depths(shapes, ground_z, k, cam_pose)
    t_min = np.minimum(t_stack.min(axis=0), tg)
    t_target = t_stack[idx]
    bitmap = (
        np.isfinite(t_target)
        & (t_target <= t_min)
        & (t_target >= k.depth_min)
        & (t_target <= k.depth_max)
    )
    return SegmentationMask(k.width, k.height, bitmap, timestamp)


def apply_depth_noise(
    d: DepthImage, rng: np.random.Generator, sigma0_mm: float = 1.0, k_mm_per_m2: float = 2.0
) -> DepthImage:
    """Additive stereo-style depth noise, sigma(z) = sigma0 + k * z^2, then re-quantize."""
    z = d.data.astype(np.float64)
    sigma = sigma0_mm + k_mm_per_m2 * (z * 1e-3) ** 2
    noisy = z + rng.standard_normal(z.shape) * sigma
    noisy = np.where(d.data > 0, np.clip(np.rint(noisy), 1, 65535), 0).astype(np.uint16)
    return DepthImage(d.width, d.height, noisy, d.timestamp)


def _shift(bitmap: np.ndarray, dy: int, dx: int, fill: bool) -> np.ndarray:
    out = np.full_like(bitmap, fill)
    h, w = bitmap.shape
    ys = slice(max(0, dy), min(h, h + dy))
    xs = slice(max(0, dx), min(w, w + dx))
    ys_src = slice(max(0, -dy), min(h, h - dy))
    xs_src = slice(max(0, -dx), min(w, w - dx))
    out[ys, xs] = bitmap[ys_src, xs_src]
    return out


def _erode(bitmap: np.ndarray) -> np.ndarray:
    out = bitmap.copy()
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        out &= _shift(bitmap, dy, dx, False)
    return out


def _dilate(bitmap: np.ndarray) -> np.ndarray:
    out = bitmap.copy()
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        out |= _shift(bitmap, dy, dx, False)
    return out


def corrupt_mask(
    m: SegmentationMask, erode_px: int, dilate_px: int, flip_rate: float, seed: int
) -> SegmentationMask:
    """Degrade a mask: erosion, dilation, then seeded boundary-pixel flips."""
    if erode_px < 0 or dilate_px < 0:
        raise ValueError("morphology radii must be non-negative")
    if not (0.0 <= flip_rate < 1.0):
        raise ValueError("flip_rate must be in [0, 1)")
    bitmap = m.bitmap.copy()
    for _ in range(erode_px):
        bitmap = _erode(bitmap)
    for _ in range(dilate_px):
        bitmap = _dilate(bitmap)
    if flip_rate > 0.0:
        boundary = _dilate(bitmap) & ~_erode(bitmap)
        rng = np.random.default_rng(seed)
        flips = boundary & (rng.random(bitmap.shape) < flip_rate)
        bitmap ^= flips
    return SegmentationMask(m.width, m.height, bitmap, m.timestamp)


def distance_to_surface(shape: PrimitiveShape, points: np.ndarray) -> np.ndarray:
    """Unsigned distance from world points to the primitive's surface (oracle)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    inv_pose = inverse(shape.pose)
    p = transform_points(inv_pose, pts)
    if shape.kind == "sphere":
        d = np.abs(np.linalg.norm(p, axis=1) - shape.dimensions[0])
    elif shape.kind == "box":
        half = np.asarray(shape.dimensions) * 0.5
        q = np.abs(p) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        d = np.abs(outside + inside)
    else:
        radius, height = shape.dimensions
        half_h = 0.5 * height
        rad = np.linalg.norm(p[:, :2], axis=1)
        if shape.kind == "capsule":
            zc = np.clip(p[:, 2], -half_h, half_h)
            d = np.abs(np.sqrt(rad**2 + (p[:, 2] - zc) ** 2) - radius)
        else:
            dr = rad - radius
            dz = np.abs(p[:, 2]) - half_h
            outside = np.sqrt(np.maximum(dr, 0.0) ** 2 + np.maximum(dz, 0.0) ** 2)
            inside = np.minimum(np.maximum(dr, dz), 0.0)
            d = np.abs(outside + inside)
    return d


def sample_surface(shape: PrimitiveShape, n: int, seed: int = 0) -> np.ndarray:
    """Seeded area-weighted random sample of the surface, world frame (N, 3)."""
    rng = np.random.default_rng(seed)
    if shape.kind == "sphere":
        r = shape.dimensions[0]
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        local = v * r
    elif shape.kind == "box":
        ex, ey, ez = shape.dimensions
        areas = np.array([ey * ez, ey * ez, ex * ez, ex * ez, ex * ey, ex * ey])
        face = rng.choice(6, size=n, p=areas / areas.sum())
        u = rng.uniform(-0.5, 0.5, size=(n, 2))
        local = np.zeros((n, 3))
        for f in range(6):
            sel = face == f
            axis = f // 2
            sign = 1.0 if f % 2 == 0 else -1.0
            others = [a for a in range(3) if a != axis]
            dims = np.array(shape.dimensions)
            local[sel, axis] = sign * dims[axis] / 2
            local[sel, others[0]] = u[sel, 0] * dims[others[0]]
            local[sel, others[1]] = u[sel, 1] * dims[others[1]]
    else:
        radius, height = shape.dimensions
        side_area = 2 * math.pi * radius * height
        if shape.kind == "cylinder":
            cap_area = 2 * math.pi * radius**2
        else:
            cap_area = 4 * math.pi * radius**2
        p_side = side_area / (side_area + cap_area)
        on_side = rng.random(n) < p_side
        phi = rng.uniform(0, 2 * math.pi, n)
        local = np.zeros((n, 3))
        z = rng.uniform(-height / 2, height / 2, n)
        local[on_side] = np.stack(
            [radius * np.cos(phi), radius * np.sin(phi), z], axis=1
        )[on_side]
        caps = ~on_side
        if shape.kind == "cylinder":
            rr = radius * np.sqrt(rng.random(n))
            zc = np.where(rng.random(n) < 0.5, -height / 2, height / 2)
            local[caps] = np.stack([rr * np.cos(phi), rr * np.sin(phi), zc], axis=1)[caps]
        else:
            v = rng.standard_normal((n, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            zc = np.where(v[:, 2] >= 0, height / 2, -height / 2)
            hemi = v * radius
            hemi[:, 2] += zc
            local[caps] = hemi[caps]
    return transform_points(shape.pose, local)
