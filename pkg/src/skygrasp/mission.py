"""Mission state machine and setpoint generation.

Deterministic transition function for the search / approach / refine /
grasp / deliver mission: all mutable progress lives in a MissionStatus
value that step() consumes and returns, so a mission can be replayed
tick-for-tick from a log. The search phase covers a rectangular field
with a boustrophedon (serpentine) lane sweep.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .camera import CameraIntrinsics
from .errors import ConfigError, ContractViolationError
from .fusion import FusedTarget
from .se3 import Pose, wrap_angle


class MissionState(enum.Enum):
    INIT = "Init"
    TAKEOFF = "Takeoff"
    SEARCH = "Search"
    APPROACH = "Approach"
    REFINE = "Refine"
    DESCEND = "Descend"
    CLOSE_GRIPPER = "CloseGripper"
    LIFT = "Lift"
    TRANSPORT = "Transport"
    DROP = "Drop"
    LAND = "Land"
    DONE = "Done"
    ABORT = "Abort"


# states in which the target-tracking pipeline is consuming frames
TRACKING_STATES = (
    MissionState.SEARCH,
    MissionState.APPROACH,
    MissionState.REFINE,
    MissionState.DESCEND,
)

_DEFAULT_TIMEOUTS = {
    MissionState.INIT: 10,
    MissionState.TAKEOFF: 4000,
    MissionState.SEARCH: 60000,
    MissionState.APPROACH: 4000,
    MissionState.REFINE: 3000,
    MissionState.DESCEND: 3000,
    MissionState.CLOSE_GRIPPER: 1000,
    MissionState.LIFT: 4000,
    MissionState.TRANSPORT: 8000,
    MissionState.DROP: 1000,
    MissionState.LAND: 6000,
}


@dataclass(frozen=True)
class MissionConfig:
    search_area: tuple  # (n_min, n_max, e_min, e_max) meters
    drop_point: tuple = (0.0, 0.0, -0.3)
    search_altitude: float = 1.5
    altitude_floor: float = 0.8  # SLAM initializes poorly closer to the ground
    lane_spacing: float = 0.0  # 0 -> derived from the camera ground footprint
    cruise_speed: float = 0.8
    refine_hover_height: float = 0.8
    descent_speed: float = 0.4
    grasp_close_height: float = 0.05  # fingers close this far below the fused surface point
    gripper_offset: float = 0.12  # gripper center this far below the body origin
    retry_limit: int = 2
    frame_budget: int = 400  # short-horizon tracking limit
    n_refine: int = 10
    refine_spread: float = 0.03
    arrive_tol: float = 0.15
    altitude_tol: float = 0.10
    target_timeout_ticks: int = 600
    close_dwell_ticks: int = 100
    drop_dwell_ticks: int = 100
    timeouts: dict = field(default_factory=dict)

    def __post_init__(self):
        n_min, n_max, e_min, e_max = self.search_area
        if not (n_max > n_min and e_max > e_min):
            raise ConfigError("degenerate search rectangle")
        if self.search_altitude < self.altitude_floor:
            raise ConfigError(
                f"search_altitude {self.search_altitude} below floor {self.altitude_floor}"
            )
        if self.retry_limit < 0:
            raise ConfigError("retry_limit must be >= 0")
        if not (1 <= self.frame_budget <= 400):
            raise ConfigError("frame_budget must be in [1, 400]")
        if self.cruise_speed <= 0 or self.descent_speed <= 0:
            raise ConfigError("speeds must be positive")

    def timeout_for(self, state: MissionState) -> int:
        return self.timeouts.get(state.value, _DEFAULT_TIMEOUTS.get(state, 10**9))


@dataclass(frozen=True)
class Setpoint:
    position: np.ndarray
    yaw: float
    gripper: str  # "open" | "closed"
    timestamp: int

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(p)) or not math.isfinite(self.yaw):
            raise ValueError("non-finite setpoint")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class MissionInputs:
    est_pose: Pose
    tick: int
    frames_used: int = 0
    fused: FusedTarget = None
    fused_tick: int = -1  # tick of the most recent fusion update
    fused_fresh: bool = False  # True when fused was updated this tick
    plan_yaw: float = None  # closing-axis heading from the latest grasp plan
    gripper_closed: bool = False


@dataclass(frozen=True)
class MissionStatus:
    """Everything the transition function needs besides the inputs."""

    state: MissionState = MissionState.INIT
    state_entry_tick: int = 0
    home: tuple = None
    wp_index: int = 0
    retries_left: int = None  # filled from config on first step
    refine_points: tuple = ()
    locked_target: tuple = None
    locked_yaw: float = 0.0
    last_yaw: float = 0.0
    abort_reason: str = None


def generate_search_pattern(cfg: MissionConfig, k: CameraIntrinsics):
    """Boustrophedon waypoints [(position, yaw), ...] covering the field."""
    n_min, n_max, e_min, e_max = cfg.search_area
    if cfg.lane_spacing > 0:
        spacing = cfg.lane_spacing
    else:
        footprint = cfg.search_altitude * k.width / k.fx
        spacing = 0.7 * footprint
    extent = e_max - e_min
    n_lanes = int(math.floor(extent / spacing + 1e-9)) + 1
    if n_lanes <= 1:
        lanes = [0.5 * (e_min + e_max)]
    else:
        lanes = [e_min + i * extent / (n_lanes - 1) for i in range(n_lanes)]
    z = -cfg.search_altitude
    waypoints = []
    for i, e in enumerate(lanes):
        ends = (n_min, n_max) if i % 2 == 0 else (n_max, n_min)
        yaw = 0.0 if i % 2 == 0 else math.pi
        waypoints.append((np.array([ends[0], e, z]), yaw))
        waypoints.append((np.array([ends[1], e, z]), yaw))
    return waypoints


def _hdist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _spread(points) -> float:
    pts = np.asarray(points)
    return float(np.linalg.norm(pts - pts.mean(axis=0), axis=1).max())


def _enter(st: MissionStatus, state: MissionState, tick: int, **kw) -> MissionStatus:
    return replace(st, state=state, state_entry_tick=tick, **kw)


def _retry_or_abort(st: MissionStatus, tick: int) -> MissionStatus:
    if st.retries_left <= 0:
        return _enter(st, MissionState.ABORT, tick, abort_reason="retries")
    return _enter(
        st, MissionState.SEARCH, tick,
        retries_left=st.retries_left - 1, wp_index=0, refine_points=(), locked_target=None,
    )


def step(st: MissionStatus, inputs: MissionInputs, cfg: MissionConfig,
         waypoints=None, k: CameraIntrinsics = None):
    """One deterministic transition; returns (new_status, setpoint)."""
    if not isinstance(st.state, MissionState):
        raise ContractViolationError(f"unknown state {st.state!r}")
    if waypoints is None:
        if k is None:
            raise ContractViolationError("need waypoints or intrinsics to derive them")
        waypoints = generate_search_pattern(cfg, k)

    tick = inputs.tick
    pos = inputs.est_pose.translation
    yaw_now = inputs.est_pose.rotation.yaw()
    state = st.state

    if st.retries_left is None:
        st = replace(st, retries_left=cfg.retry_limit)
    if st.home is None:
        st = replace(st, home=(float(pos[0]), float(pos[1]), float(pos[2])))

    target_fresh = (
        inputs.fused is not None
        and inputs.fused_tick >= 0
        and tick - inputs.fused_tick <= cfg.target_timeout_ticks
    )
    in_state_ticks = tick - st.state_entry_tick

    # mission-wide exception checks
    if state in TRACKING_STATES and inputs.frames_used > cfg.frame_budget:
        st = _enter(st, MissionState.ABORT, tick, abort_reason="frame_budget")
        return st, _hold(st, pos, yaw_now, tick, gripper="open")
    if state not in (MissionState.DONE, MissionState.ABORT) and in_state_ticks > cfg.timeout_for(state):
        if state in (MissionState.APPROACH, MissionState.REFINE, MissionState.DESCEND):
            st = _retry_or_abort(st, tick)
            state = st.state
        else:
            st = _enter(st, MissionState.ABORT, tick, abort_reason=f"timeout:{state.value}")
            return st, _hold(st, pos, yaw_now, tick, gripper="open")

    if state is MissionState.INIT:
        st = _enter(st, MissionState.TAKEOFF, tick)
        sp = Setpoint(np.array([st.home[0], st.home[1], -cfg.search_altitude]), st.last_yaw, "open", tick)
        return st, sp

    if state is MissionState.TAKEOFF:
        target = np.array([st.home[0], st.home[1], -cfg.search_altitude])
        if abs(pos[2] - target[2]) < cfg.altitude_tol:
            st = _enter(st, MissionState.SEARCH, tick)
        return st, Setpoint(target, st.last_yaw, "open", tick)

    if state is MissionState.SEARCH:
        if target_fresh:
            st = _enter(st, MissionState.APPROACH, tick)
            return _approach_step(st, inputs, cfg, tick)
        wp_pos, wp_yaw = waypoints[st.wp_index]
        if _hdist(pos, wp_pos) < cfg.arrive_tol:
            if st.wp_index + 1 < len(waypoints):
                st = replace(st, wp_index=st.wp_index + 1)
                wp_pos, wp_yaw = waypoints[st.wp_index]
            else:
                # swept the whole field without a detection
                st = _retry_or_abort(st, tick)
                if st.state is MissionState.ABORT:
                    return st, _hold(st, pos, yaw_now, tick, gripper="open")
                wp_pos, wp_yaw = waypoints[st.wp_index]
        st = replace(st, last_yaw=wp_yaw)
        return st, Setpoint(wp_pos, wp_yaw, "open", tick)

    if state is MissionState.APPROACH:
        if not target_fresh:
            st = _retry_or_abort(st, tick)
            return st, _hold(st, pos, yaw_now, tick, gripper="open")
        fused = inputs.fused.point
        hover = np.array([fused[0], fused[1], fused[2] - cfg.refine_hover_height])
        if _hdist(pos, fused) < cfg.arrive_tol and abs(pos[2] - hover[2]) < cfg.altitude_tol:
            st = _enter(st, MissionState.REFINE, tick, refine_points=())
        return st, Setpoint(hover, st.last_yaw, "open", tick)

    if state is MissionState.REFINE:
        if not target_fresh:
            st = _retry_or_abort(st, tick)
            return st, _hold(st, pos, yaw_now, tick, gripper="open")
        fused = inputs.fused.point
        if inputs.fused_fresh:
            pts = (st.refine_points + (tuple(fused),))[-cfg.n_refine :]
            st = replace(st, refine_points=pts)
            if len(pts) == cfg.n_refine and _spread(pts) < cfg.refine_spread:
                yaw = inputs.plan_yaw if inputs.plan_yaw is not None else st.last_yaw
                st = _enter(
                    st, MissionState.DESCEND, tick,
                    locked_target=tuple(fused), locked_yaw=wrap_angle(yaw), last_yaw=wrap_angle(yaw),
                )
                return _descend_step(st, inputs, cfg, tick)
        hover = np.array([fused[0], fused[1], fused[2] - cfg.refine_hover_height])
        return st, Setpoint(hover, st.last_yaw, "open", tick)

    if state is MissionState.DESCEND:
        if not target_fresh:
            st = _retry_or_abort(st, tick)
            return st, _hold(st, pos, yaw_now, tick, gripper="open")
        gripper_z = pos[2] + cfg.gripper_offset
        # The fused point sits on the object's visible (upper) surface, so the
        # gripper must descend past it for the fingers to wrap the body.
        if gripper_z >= st.locked_target[2] + cfg.grasp_close_height:
            st = _enter(st, MissionState.CLOSE_GRIPPER, tick)
            return st, _hold(st, pos, st.locked_yaw, tick, gripper="closed")
        return _descend_step(st, inputs, cfg, tick)

    if state is MissionState.CLOSE_GRIPPER:
        if in_state_ticks >= cfg.close_dwell_ticks:
            st = _enter(st, MissionState.LIFT, tick)
        return st, _hold(st, pos, st.locked_yaw, tick, gripper="closed")

    if state is MissionState.LIFT:
        up = np.array([pos[0], pos[1], -cfg.search_altitude])
        if abs(pos[2] + cfg.search_altitude) < cfg.altitude_tol:
            st = _enter(st, MissionState.TRANSPORT, tick)
        return st, Setpoint(up, st.locked_yaw, "closed", tick)

    if state is MissionState.TRANSPORT:
        drop = np.asarray(cfg.drop_point, dtype=np.float64)
        if _hdist(pos, drop) < cfg.arrive_tol:
            st = _enter(st, MissionState.DROP, tick)
            return st, Setpoint(drop, st.last_yaw, "open", tick)
        return st, Setpoint(drop, st.last_yaw, "closed", tick)

    if state is MissionState.DROP:
        if in_state_ticks >= cfg.drop_dwell_ticks:
            st = _enter(st, MissionState.LAND, tick)
        return st, _hold(st, pos, st.last_yaw, tick, gripper="open")

    if state is MissionState.LAND:
        ground = np.array([pos[0], pos[1], -0.02])
        if pos[2] > -0.08:
            st = _enter(st, MissionState.DONE, tick)
        return st, Setpoint(ground, st.last_yaw, "open", tick)

    if state in (MissionState.DONE, MissionState.ABORT):
        return st, _hold(st, pos, yaw_now, tick, gripper="open")

    raise ContractViolationError(f"unhandled state {state!r}")  # pragma: no cover


def _hold(st: MissionStatus, pos, yaw, tick, gripper) -> Setpoint:
    return Setpoint(np.array(pos, dtype=np.float64), yaw, gripper, tick)


def _approach_step(st, inputs, cfg, tick):
    fused = inputs.fused.point
    hover = np.array([fused[0], fused[1], fused[2] - cfg.refine_hover_height])
    return st, Setpoint(hover, st.last_yaw, "open", tick)


def _descend_step(st, inputs, cfg, tick):
    target = np.array(
        [
            st.locked_target[0],
            st.locked_target[1],
            st.locked_target[2] + cfg.grasp_close_height - cfg.gripper_offset + 0.02,
        ]
    )
    return st, Setpoint(target, st.locked_yaw, "open", tick)
