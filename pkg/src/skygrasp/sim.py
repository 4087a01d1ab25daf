"""Deterministic logical-clock simulation tying the stack together.

Kinematic first-order vehicle, a calibrated pose-noise stand-in for SLAM,
sensor scheduling (camera frames on nearest ticks of a faster control
clock), a parametric downwash disturbance, grasp outcome scoring, and the
scenario runner that produces a complete reproducible run log.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import mission as mi
from .camera import (
    PrimitiveShape,
    apply_depth_noise,
    corrupt_mask,
    render_depth,
    render_mask,
)
from .fusion import TargetEstimate, fuse_window
from .planner import frame_target_estimate
from .scenario import DownwashParams, NoiseModel, ScenarioConfig, VehicleParams
from .se3 import Pose, UnitQuaternion, compose, inverse, wrap_angle
from .trajeval import Trajectory
from .formats import write_ply, write_tum


@dataclass
class VehicleState:
    true_pose: Pose
    velocity: np.ndarray  # m/s world
    estimated_pose: Pose
    gripper: str = "open"  # "open" | "closed"
    payload: int = None  # object index while attached


def step_vehicle(s: VehicleState, sp: mi.Setpoint, dt: float, params: VehicleParams) -> VehicleState:
    """First-order setpoint tracking with a speed clamp."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pos = s.true_pose.translation
    v = params.kp * (sp.position - pos)
    speed = float(np.linalg.norm(v))
    if speed > params.v_max:
        v = v * (params.v_max / speed)
    new_pos = pos + v * dt
    yaw = s.true_pose.rotation.yaw()
    yaw_err = wrap_angle(sp.yaw - yaw)
    new_yaw = wrap_angle(yaw + params.yaw_kp * yaw_err * dt)
    return VehicleState(
        true_pose=Pose(UnitQuaternion.from_yaw(new_yaw), new_pos),
        velocity=v,
        estimated_pose=s.estimated_pose,
        gripper=sp.gripper,
        payload=s.payload,
    )


class NoiseState:
    """Seeded state of the SLAM pose-noise model; one instance per run."""

    def __init__(self, model: NoiseModel, tick_rate: int):
        self.model = model
        self.rng = np.random.default_rng(model.seed)
        self.walk = np.zeros(3)
        self.yaw_walk = 0.0

    def advance(self, speed: float):
        """One tick of noise evolution; returns (translation_error, yaw_error)."""
        m = self.model
        self.walk = self.walk + self.rng.standard_normal(3) * m.sigma_walk
        self.yaw_walk = self.yaw_walk + float(self.rng.standard_normal()) * m.sigma_yaw
        # fixed-magnitude jitter with a fresh direction every tick
        w = self.rng.standard_normal(3)
        n = float(np.linalg.norm(w))
        direction = w / n if n > 0 else np.array([1.0, 0.0, 0.0])
        jitter = m.sigma_jitter * (1.0 + m.k_v * speed) * direction
        return self.walk + jitter, self.yaw_walk


def apply_slam_noise(true_pose: Pose, s: VehicleState, n: NoiseState) -> Pose:
    """Perturb a true pose by one tick of accumulated noise-model error."""
    terr, yerr = n.advance(float(np.linalg.norm(s.velocity)))
    return Pose(
        UnitQuaternion.from_yaw(yerr).multiply(true_pose.rotation),
        true_pose.translation + terr,
    )


@dataclass(frozen=True)
class GraspOutcome:
    success: bool
    horizontal_error: float
    vertical_error: float
    failure_mode: str  # none | horizontal_miss | closed_above_object | object_shifted

    def to_record(self) -> dict:
        return {
            "success": self.success,
            "horizontal_error": self.horizontal_error,
            "vertical_error": self.vertical_error,
            "failure_mode": self.failure_mode,
        }


def evaluate_grasp(
    vehicle: VehicleState,
    target: PrimitiveShape,
    gripper_offset: float,
    params: VehicleParams,
    original_centroid=None,
    shift_eps: float = 0.02,
) -> GraspOutcome:
    """Score a gripper closure against the object's true (possibly shifted) pose.

    Success needs the gripper center horizontally within the capture radius
    of the object centroid and the closure height between the object top and
    min_wrap above its base.
    """
    gripper = vehicle.true_pose.translation + np.array([0.0, 0.0, gripper_offset])
    c = target.centroid
    h_err = math.hypot(gripper[0] - c[0], gripper[1] - c[1])
    v_err = abs(gripper[2] - c[2])
    horizontal_ok = h_err <= params.capture_radius
    # NED: top_z < base_z; closure must land inside the object's vertical span
    vertical_ok = target.top_z() <= gripper[2] <= target.base_z() - params.min_wrap
    if horizontal_ok and vertical_ok:
        return GraspOutcome(True, h_err, v_err, "none")
    shifted = (
        original_centroid is not None
        and float(np.linalg.norm(c[:2] - np.asarray(original_centroid)[:2])) > shift_eps
    )
    if shifted:
        mode = "object_shifted"
    elif not horizontal_ok:
        mode = "horizontal_miss"
    else:
        mode = "closed_above_object"
    return GraspOutcome(False, h_err, v_err, mode)


def apply_downwash(
    target: PrimitiveShape,
    vehicle: VehicleState,
    params: DownwashParams,
    mass_g: float,
    dt: float,
    rng: np.random.Generator,
) -> PrimitiveShape:
    """Shift a light object sideways when the vehicle hovers low above it."""
    if not params.enabled:
        return target
    pos = vehicle.true_pose.translation
    c = target.centroid
    height = c[2] - pos[2]  # vehicle above object -> positive
    if height <= 0 or height > params.activation_height:
        return target
    radial = c[:2] - pos[:2]
    dist = float(np.linalg.norm(radial))
    if dist > params.cone_radius:
        return target
    if dist > 1e-6:
        direction = radial / dist
    else:
        phi = rng.uniform(0.0, 2.0 * math.pi)
        direction = np.array([math.cos(phi), math.sin(phi)])
    mass_kg = mass_g * 1e-3
    step = min(params.gain / (height * mass_kg), params.max_step)
    new_t = c.copy()
    new_t[:2] = c[:2] + direction * step
    return PrimitiveShape(target.kind, target.dimensions, Pose(target.pose.rotation, new_t))


@dataclass
class RunLog:
    truth: Trajectory
    estimate: Trajectory
    mission_records: list
    fused_history: list
    outcome: GraspOutcome
    final_state: str
    abort_reason: str
    ticks: int
    frames_used: int
    success: bool
    last_candidates: object = None

    def outcome_record(self) -> dict:
        rec = {
            "success": self.success,
            "final_state": self.final_state,
            "abort_reason": self.abort_reason,
            "ticks": self.ticks,
            "frames_used": self.frames_used,
        }
        rec["grasp"] = self.outcome.to_record() if self.outcome else None
        return rec

    def write(self, out_dir: str, snapshots: bool = True) -> None:
        os.makedirs(out_dir, exist_ok=True)
        write_tum(os.path.join(out_dir, "truth.tum"), self.truth)
        write_tum(os.path.join(out_dir, "estimate.tum"), self.estimate)
        with open(os.path.join(out_dir, "mission.jsonl"), "w") as f:
            for rec in self.mission_records:
                f.write(json.dumps(rec, sort_keys=True) + "\n")
        with open(os.path.join(out_dir, "outcome.json"), "w") as f:
            json.dump(self.outcome_record(), f, indent=2, sort_keys=True)
            f.write("\n")
        if snapshots and self.last_candidates is not None:
            write_ply(os.path.join(out_dir, "candidates.ply"), self.last_candidates)


def _camera_tick_set(tick_rate: int, camera_rate: int, max_ticks: int):
    """Nearest-tick schedule for a camera slower than the control clock."""
    n_frames = int(max_ticks * camera_rate / tick_rate) + 2
    ticks = np.rint(np.arange(n_frames) * tick_rate / camera_rate).astype(int)
    return set(int(t) for t in ticks if t < max_ticks)


def _target_visible(shape: PrimitiveShape, cam_pose: Pose, k) -> bool:
    p_cam = compose(inverse(cam_pose), Pose(UnitQuaternion.identity(), shape.centroid)).translation
    if not (k.depth_min <= p_cam[2] <= k.depth_max):
        return False
    u = k.cx + k.fx * p_cam[0] / p_cam[2]
    v = k.cy + k.fy * p_cam[1] / p_cam[2]
    return 2 <= u < k.width - 2 and 2 <= v < k.height - 2


def run_scenario(cfg: ScenarioConfig) -> RunLog:
    """Drive the logical clock over a full mission; deterministic per config."""
    dt = 1.0 / cfg.tick_rate
    max_ticks = int(cfg.max_sim_seconds * cfg.tick_rate)
    camera_ticks = _camera_tick_set(cfg.tick_rate, cfg.camera_rate, max_ticks)

    noise = NoiseState(cfg.noise, cfg.tick_rate)
    mask_rng = np.random.default_rng(cfg.seed + 101)
    depth_rng = np.random.default_rng(cfg.seed + 202)
    downwash_rng = np.random.default_rng(cfg.seed + 303)

    start = np.asarray(cfg.vehicle.start, dtype=np.float64)
    vehicle = VehicleState(
        true_pose=Pose(UnitQuaternion.identity(), start),
        velocity=np.zeros(3),
        estimated_pose=Pose(UnitQuaternion.identity(), start),
    )

    shapes = [o.shape for o in cfg.objects]
    target_obj = cfg.target
    target_shape = shapes[cfg.target_index]
    original_centroid = target_shape.centroid.copy()

    status = mi.MissionStatus()
    waypoints = mi.generate_search_pattern(cfg.mission, cfg.camera)

    estimates = []
    fused = None
    fused_tick = -1
    plan_yaw = None
    last_plan = None
    frames_used = 0
    designated = False
    outcome = None
    truth_samples = []
    est_samples = []
    mission_records = []
    fused_history = []

    tick = 0
    while tick < max_ticks:
        vehicle.estimated_pose = apply_slam_noise(vehicle.true_pose, vehicle, noise)

        fused_fresh = False
        if tick in camera_ticks:
            t_sec = tick * dt
            truth_samples.append((t_sec, vehicle.true_pose))
            est_samples.append((t_sec, vehicle.estimated_pose))
            cam_pose_true = compose(vehicle.true_pose, cfg.cam_mount)
            if not designated and tick >= cfg.designation_tick:
                designated = _target_visible(target_shape, cam_pose_true, cfg.camera)
            tracking = status.state in mi.TRACKING_STATES or status.state in (
                mi.MissionState.INIT, mi.MissionState.TAKEOFF
            )
            if (
                designated
                and tracking
                and vehicle.gripper == "open"
                and frames_used <= cfg.mission.frame_budget
            ):
                frames_used += 1
                depth = render_depth(shapes, cfg.ground_z, cfg.camera, cam_pose_true, timestamp=tick)
                if cfg.depth_noise.enabled:
                    depth = apply_depth_noise(
                        depth, depth_rng, cfg.depth_noise.sigma0_mm, cfg.depth_noise.k_mm_per_m2
                    )
                mask = render_mask(
                    target_shape, shapes, cfg.ground_z, cfg.camera, cam_pose_true, timestamp=tick
                )
                mc = cfg.mask_corruption
                if mc.erode_px or mc.dilate_px or mc.flip_rate:
                    mask = corrupt_mask(
                        mask, mc.erode_px, mc.dilate_px, mc.flip_rate,
                        seed=int(mask_rng.integers(0, 2**31)),
                    )
                cam_pose_est = compose(vehicle.estimated_pose, cfg.cam_mount)
                result = frame_target_estimate(depth, mask, cfg.camera, cam_pose_est, cfg.planner)
                if result is not None:
                    point, plan = result
                    estimates.append(TargetEstimate(point, tick))
                    fused = fuse_window(estimates, cfg.fusion.tau, cfg.fusion.window)
                    fused_tick = tick
                    fused_fresh = True
                    last_plan = plan
                    plan_yaw = math.atan2(plan.closing_axis[1], plan.closing_axis[0])
                    fused_history.append(
                        {"tick": tick, "point": fused.point.tolist(),
                         "inliers": fused.inlier_count, "rms": fused.residual_rms}
                    )

        inputs = mi.MissionInputs(
            est_pose=vehicle.estimated_pose,
            tick=tick,
            frames_used=frames_used,
            fused=fused,
            fused_tick=fused_tick,
            fused_fresh=fused_fresh,
            plan_yaw=plan_yaw,
            gripper_closed=vehicle.gripper == "closed",
        )
        status, sp = mi.step(status, inputs, cfg.mission, waypoints=waypoints)

        if sp.gripper == "closed" and outcome is None:
            outcome = evaluate_grasp(
                vehicle, target_shape, cfg.mission.gripper_offset, cfg.vehicle,
                original_centroid=original_centroid,
            )
            if outcome.success:
                vehicle.payload = cfg.target_index

        if (
            cfg.downwash.enabled
            and not target_obj.high_friction
            and vehicle.payload is None
            and outcome is None
        ):
            new_shape = apply_downwash(
                target_shape, vehicle, cfg.downwash, target_obj.mass_g, dt, downwash_rng
            )
            if new_shape is not target_shape:
                target_shape = new_shape
                shapes[cfg.target_index] = new_shape

        prev_pos = vehicle.true_pose.translation.copy()
        vehicle = step_vehicle(vehicle, sp, dt, cfg.vehicle)
        if vehicle.payload is not None:
            delta = vehicle.true_pose.translation - prev_pos
            target_shape = PrimitiveShape(
                target_shape.kind, target_shape.dimensions,
                Pose(target_shape.pose.rotation, target_shape.pose.translation + delta),
            )
            shapes[cfg.target_index] = target_shape

        mission_records.append(
            {
                "tick": tick,
                "state": status.state.value,
                "setpoint": {
                    "position": sp.position.tolist(),
                    "yaw": sp.yaw,
                    "gripper": sp.gripper,
                },
                "fused": fused.point.tolist() if fused is not None else None,
                "truth": vehicle.true_pose.translation.tolist(),
                "estimate": vehicle.estimated_pose.translation.tolist(),
                "frames_used": frames_used,
            }
        )

        if status.state in (mi.MissionState.DONE, mi.MissionState.ABORT):
            break
        tick += 1

    success = (
        status.state is mi.MissionState.DONE and outcome is not None and outcome.success
    )
    if outcome is None:
        outcome = GraspOutcome(False, math.inf, math.inf, "horizontal_miss")
    return RunLog(
        truth=Trajectory(truth_samples),
        estimate=Trajectory(est_samples),
        mission_records=mission_records,
        fused_history=fused_history,
        outcome=outcome,
        final_state=status.state.value,
        abort_reason=status.abort_reason,
        ticks=tick,
        frames_used=frames_used,
        success=success,
        last_candidates=last_plan.candidates if last_plan is not None else None,
    )


@dataclass
class BatchRow:
    name: str
    attempts: int
    successes: int
    mass_g: float
    dimensions: tuple
    failure_histogram: dict

    @property
    def success_rate(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


def batch_run(cfg: ScenarioConfig, seeds) -> BatchRow:
    """Run one scenario across seeds; aggregate outcomes for its target object."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("batch_run needs at least one seed")
    histogram = {"horizontal_miss": 0, "closed_above_object": 0, "object_shifted": 0}
    successes = 0
    for seed in seeds:
        log = run_scenario(cfg.with_seed(seed))
        if log.success:
            successes += 1
        else:
            mode = log.outcome.failure_mode
            if mode == "none":  # grasped but mission aborted later
                mode = "horizontal_miss"
            histogram[mode] = histogram.get(mode, 0) + 1
    t = cfg.target
    return BatchRow(
        name=t.name,
        attempts=len(seeds),
        successes=successes,
        mass_g=t.mass_g,
        dimensions=t.shape.dimensions,
        failure_histogram=histogram,
    )


def scripted_profile(tick_rate: int = 200, camera_rate: int = 30):
    """Reference mission profile: takeoff, lane sweep, approach, fast descent.

    Returns (times, positions, speeds) sampled at camera rate; used to
    calibrate and verify the pose-noise model without running a full mission.
    """
    legs = [
        # (duration_s, start, end)
        (3.0, (0.0, 0.0, -0.02), (0.0, 0.0, -1.5)),
        (4.0, (0.0, 0.0, -1.5), (3.2, 0.0, -1.5)),
        (1.5, (3.2, 0.0, -1.5), (3.2, 1.2, -1.5)),
        (4.0, (3.2, 1.2, -1.5), (0.0, 1.2, -1.5)),
        (2.0, (0.0, 1.2, -1.5), (1.6, 1.8, -1.5)),
        (2.0, (1.6, 1.8, -1.5), (1.6, 1.8, -0.9)),  # hover-ish refine
        (1.0, (1.6, 1.8, -0.9), (1.6, 1.8, 0.3)),  # fast descent leg
        (1.5, (1.6, 1.8, 0.3), (1.6, 1.8, 0.3)),
    ]
    dt = 1.0 / camera_rate
    times, positions, speeds = [], [], []
    t0 = 0.0
    for dur, a, b in legs:
        a = np.asarray(a)
        b = np.asarray(b)
        v = (b - a) / dur
        n = int(round(dur * camera_rate))
        for i in range(n):
            times.append(t0 + i * dt)
            positions.append(a + v * (i * dt))
            speeds.append(float(np.linalg.norm(v)))
        t0 += dur
    return np.array(times), np.array(positions), np.array(speeds)


def noisy_profile_trajectories(model: NoiseModel, tick_rate: int = 200, camera_rate: int = 30):
    """Truth and noise-corrupted estimate trajectories over the scripted profile."""
    times, positions, speeds = scripted_profile(tick_rate, camera_rate)
    noise = NoiseState(model, tick_rate)
    ticks_per_frame = tick_rate / camera_rate
    truth, est = [], []
    next_tick = 0.0
    tick_count = 0
    for t, p, v in zip(times, positions, speeds):
        # advance the 200 Hz noise clock up to this camera sample
        next_tick += ticks_per_frame
        terr, yerr = np.zeros(3), 0.0
        while tick_count < int(round(next_tick)):
            terr, yerr = noise.advance(v)
            tick_count += 1
        pose_true = Pose(UnitQuaternion.identity(), p)
        pose_est = Pose(UnitQuaternion.from_yaw(yerr), p + terr)
        truth.append((float(t), pose_true))
        est.append((float(t), pose_est))
    return Trajectory(est), Trajectory(truth)
