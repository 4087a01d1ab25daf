"""External file formats: 16-bit PGM depth, 8-bit PGM mask, ASCII PLY, TUM.

Floating-point fields are written with 17 significant digits so that
parse(format(x)) reproduces every value bit-exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError
from .camera import DepthImage, SegmentationMask
from .cloud import PointCloud

_F = "{:.17g}".format


# --- PGM ---------------------------------------------------------------


def write_depth_pgm(path, d: DepthImage) -> None:
    """16-bit binary PGM (P5, maxval 65535), big-endian samples, millimeters."""
    with open(path, "wb") as f:
        f.write(f"P5\n{d.width} {d.height}\n65535\n".encode("ascii"))
        f.write(d.data.astype(">u2").tobytes())


def read_depth_pgm(path, timestamp: int = 0) -> DepthImage:
    width, height, maxval, payload = _read_pgm_raw(path)
    if maxval != 65535:
        raise FormatError(f"expected 16-bit depth PGM, maxval {maxval}")
    data = np.frombuffer(payload, dtype=">u2")
    if data.size != width * height:
        raise FormatError("depth PGM payload size mismatch")
    return DepthImage(width, height, data.reshape(height, width).astype(np.uint16), timestamp)


def write_mask_pgm(path, m: SegmentationMask) -> None:
    """8-bit binary PGM, 0/255."""
    with open(path, "wb") as f:
        f.write(f"P5\n{m.width} {m.height}\n255\n".encode("ascii"))
        f.write((m.bitmap.astype(np.uint8) * 255).tobytes())


def read_mask_pgm(path, timestamp: int = 0) -> SegmentationMask:
    width, height, maxval, payload = _read_pgm_raw(path)
    if maxval != 255:
        raise FormatError(f"expected 8-bit mask PGM, maxval {maxval}")
    data = np.frombuffer(payload, dtype=np.uint8)
    if data.size != width * height:
        raise FormatError("mask PGM payload size mismatch")
    return SegmentationMask(width, height, data.reshape(height, width) > 127, timestamp)


def _read_pgm_raw(path):
    with open(path, "rb") as f:
        blob = f.read()
    if not blob.startswith(b"P5"):
        raise FormatError("not a binary PGM (missing P5 magic)", line=1)
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # possibly with '#' comments; payload starts after the single whitespace
    # character following maxval.
    tokens = []
    i = 2
    while len(tokens) < 3:
        while i < len(blob) and blob[i : i + 1].isspace():
            i += 1
        if i < len(blob) and blob[i : i + 1] == b"#":
            while i < len(blob) and blob[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(blob) and not blob[i : i + 1].isspace():
            i += 1
        if start == i:
            raise FormatError("truncated PGM header")
        tokens.append(blob[start:i])
    i += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as e:
        raise FormatError(f"bad PGM header token: {e}") from e
    return width, height, maxval, blob[i:]


# --- PLY ---------------------------------------------------------------


def write_ply(path, cloud: PointCloud) -> None:
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    for p in cloud.points:
        lines.append(f"{_F(p[0])} {_F(p[1])} {_F(p[2])}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_ply(path, timestamp: int = 0) -> PointCloud:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FormatError("missing 'ply' magic", line=1)
    n_vertex = None
    body_at = None
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            try:
                n_vertex = int(parts[2])
            except (IndexError, ValueError):
                raise FormatError("bad vertex element count", line=i)
        if line.strip() == "end_header":
            body_at = i
            break
    if body_at is None or n_vertex is None:
        raise FormatError("PLY header missing vertex element or end_header")
    pts = np.zeros((n_vertex, 3))
    for j in range(n_vertex):
        lineno = body_at + 1 + j
        try:
            vals = lines[body_at + j].split()
            pts[j] = [float(vals[0]), float(vals[1]), float(vals[2])]
        except (IndexError, ValueError):
            raise FormatError("bad vertex line", line=lineno)
    return PointCloud(pts, timestamp=timestamp)


# --- TUM ---------------------------------------------------------------


def write_tum(path, trajectory) -> None:
    """TUM format: 't tx ty tz qx qy qz qw', seconds / meters / unit quaternion."""
    with open(path, "w") as f:
        for t, pose in trajectory.samples:
            q = pose.rotation
            tr = pose.translation
            f.write(
                f"{_F(t)} {_F(tr[0])} {_F(tr[1])} {_F(tr[2])} "
                f"{_F(q.x)} {_F(q.y)} {_F(q.z)} {_F(q.w)}\n"
            )


def read_tum(path):
    from .trajeval import Trajectory
    from .se3 import Pose, UnitQuaternion

    samples = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise FormatError(f"expected 8 fields, got {len(parts)}", line=lineno)
            try:
                vals = [float(p) for p in parts]
            except ValueError as e:
                raise FormatError(str(e), line=lineno)
            t, tx, ty, tz, qx, qy, qz, qw = vals
            pose = Pose(UnitQuaternion.normalized(qw, qx, qy, qz), np.array([tx, ty, tz]))
            samples.append((t, pose))
    return Trajectory(samples)
