import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skygrasp.camera import DEFAULT_INTRINSICS
from skygrasp.errors import ConfigError
from skygrasp.fusion import FusedTarget
from skygrasp.mission import (
    TRACKING_STATES,
    MissionConfig,
    MissionInputs,
    MissionState,
    MissionStatus,
    Setpoint,
    generate_search_pattern,
    step,
)
from skygrasp.se3 import Pose, vec3

K = DEFAULT_INTRINSICS
TARGET = np.array([1.0, 0.5, -0.25])  # fused surface point of the object


def make_cfg(**kw):
    base = dict(search_area=(0.0, 2.0, -1.0, 1.0), drop_point=(0.0, -1.5, -0.3))
    base.update(kw)
    return MissionConfig(**base)


def fly(cfg, fused_point=TARGET, see_target=True, max_ticks=30000, speed=0.02,
        frames_per_tick=0):
    """Kinematic driver: the vehicle teleports toward each setpoint at a
    fixed speed and the fused target is re-observed every tick once airborne."""
    st = MissionStatus()
    pos = np.zeros(3)
    yaw = 0.0
    frames = 0
    trace = [st.state]
    grip_log = []
    for tick in range(max_ticks):
        airborne = st.state not in (MissionState.INIT, MissionState.TAKEOFF)
        fused = (
            FusedTarget(np.asarray(fused_point, float), 10, 1.0, 0.0)
            if (see_target and airborne)
            else None
        )
        if st.state in TRACKING_STATES:
            frames += frames_per_tick
        inputs = MissionInputs(
            est_pose=Pose.from_yaw_translation(yaw, pos),
            tick=tick,
            frames_used=frames,
            fused=fused,
            fused_tick=tick if fused is not None else -1,
            fused_fresh=fused is not None,
            plan_yaw=0.3 if fused is not None else None,
        )
        st, sp = step(st, inputs, cfg, k=K)
        if trace[-1] is not st.state:
            trace.append(st.state)
        grip_log.append((tick, sp.gripper, pos.copy()))
        d = sp.position - pos
        n = np.linalg.norm(d)
        pos = sp.position.copy() if n <= speed else pos + d * (speed / n)
        yaw = sp.yaw
        if st.state in (MissionState.DONE, MissionState.ABORT):
            break
    return st, trace, grip_log


class TestSearchPattern:
    def test_wide_field_lane_count_and_alternation(self):
        cfg = make_cfg(search_area=(0.0, 4.0, 0.0, 4.0), lane_spacing=1.0)
        wps = generate_search_pattern(cfg, K)
        lanes = sorted({round(p[1], 9) for p, _ in wps})
        assert lanes == [0.0, 1.0, 2.0, 3.0, 4.0]
        assert len(wps) == 10  # two waypoints per lane
        for i in range(0, 10, 2):
            yaw = wps[i][1]
            assert yaw == pytest.approx(0.0 if (i // 2) % 2 == 0 else math.pi)
            # each lane's two waypoints share east coordinate and yaw
            assert wps[i][0][1] == wps[i + 1][0][1]
            assert wps[i][1] == wps[i + 1][1]

    def test_narrow_field_single_centered_lane(self):
        cfg = make_cfg(search_area=(0.0, 2.0, -0.3, 0.3), lane_spacing=1.0)
        wps = generate_search_pattern(cfg, K)
        assert len(wps) == 2
        assert wps[0][0][1] == pytest.approx(0.0)

    def test_altitude_and_coverage(self):
        cfg = make_cfg(search_area=(0.0, 3.0, -1.0, 1.0))
        wps = generate_search_pattern(cfg, K)
        footprint = cfg.search_altitude * K.width / K.fx
        spacing = 0.7 * footprint
        lanes = sorted({p[1] for p, _ in wps})
        # every east coordinate in the field is within half a footprint of a lane
        for e in np.linspace(-1.0, 1.0, 101):
            assert min(abs(e - l) for l in lanes) <= footprint / 2 + 1e-9
        # adjacent lane footprints overlap (gap never exceeds the footprint)
        for a, b in zip(lanes, lanes[1:]):
            assert b - a <= footprint + 1e-9
        assert spacing <= footprint  # the derived spacing itself guarantees overlap
        assert all(p[2] == pytest.approx(-cfg.search_altitude) for p, _ in wps)


class TestConfigValidation:
    def test_degenerate_area(self):
        with pytest.raises(ConfigError):
            make_cfg(search_area=(1.0, 1.0, 0.0, 1.0))

    def test_altitude_below_floor(self):
        with pytest.raises(ConfigError):
            make_cfg(search_altitude=0.5)

    def test_frame_budget_bounds(self):
        with pytest.raises(ConfigError):
            make_cfg(frame_budget=0)
        with pytest.raises(ConfigError):
            make_cfg(frame_budget=401)


class TestHappyPath:
    def test_full_mission_reaches_done(self):
        cfg = make_cfg()
        final, trace, grip = fly(cfg)
        assert final.state is MissionState.DONE
        expected = [
            MissionState.INIT,
            MissionState.TAKEOFF,
            MissionState.SEARCH,
            MissionState.APPROACH,
            MissionState.REFINE,
            MissionState.DESCEND,
            MissionState.CLOSE_GRIPPER,
            MissionState.LIFT,
            MissionState.TRANSPORT,
            MissionState.DROP,
            MissionState.LAND,
            MissionState.DONE,
        ]
        assert trace == expected

    def test_gripper_profile(self):
        cfg = make_cfg()
        final, _, grip = fly(cfg)
        states = [g for _, g, _ in grip]
        first_closed = states.index("closed")
        last_closed = len(states) - 1 - states[::-1].index("closed")
        # single contiguous closed interval: open, then closed, then open
        assert all(s == "open" for s in states[:first_closed])
        assert all(s == "closed" for s in states[first_closed : last_closed + 1])
        assert all(s == "open" for s in states[last_closed + 1 :])

    def test_closure_height_below_fused_point(self):
        cfg = make_cfg()
        final, _, grip = fly(cfg)
        tick, _, pos = next(g for g in grip if g[1] == "closed")
        gripper_z = pos[2] + cfg.gripper_offset
        # fingers close once the gripper has passed grasp_close_height below
        # the fused (top-surface) point
        assert gripper_z >= TARGET[2] + cfg.grasp_close_height - 1e-9
        assert gripper_z <= TARGET[2] + cfg.grasp_close_height + 0.03

    def test_descend_altitude_monotone(self):
        cfg = make_cfg()
        # reconstruct z while in Descend: altitudes (NED z) never decrease
        st = MissionStatus()
        pos = np.zeros(3)
        zs = []
        for tick in range(30000):
            airborne = st.state not in (MissionState.INIT, MissionState.TAKEOFF)
            fused = FusedTarget(TARGET, 10, 1.0, 0.0) if airborne else None
            inputs = MissionInputs(
                est_pose=Pose.from_yaw_translation(0.0, pos),
                tick=tick,
                fused=fused,
                fused_tick=tick if fused is not None else -1,
                fused_fresh=fused is not None,
            )
            st, sp = step(st, inputs, cfg, k=K)
            if st.state is MissionState.DESCEND:
                zs.append(pos[2])
            d = sp.position - pos
            n = np.linalg.norm(d)
            pos = sp.position.copy() if n <= 0.02 else pos + d * (0.02 / n)
            if st.state in (MissionState.DONE, MissionState.ABORT):
                break
        assert len(zs) > 3
        assert all(b >= a - 1e-12 for a, b in zip(zs, zs[1:]))

    def test_locked_yaw_comes_from_plan(self):
        cfg = make_cfg()
        final, _, _ = fly(cfg)
        assert final.locked_yaw == pytest.approx(0.3)


class TestAborts:
    def test_frame_budget_abort(self):
        cfg = make_cfg(frame_budget=50)
        final, trace, _ = fly(cfg, frames_per_tick=3)
        assert final.state is MissionState.ABORT
        assert final.abort_reason == "frame_budget"

    def test_no_detection_retries_then_aborts(self):
        final0, _, grip0 = fly(make_cfg(retry_limit=0), see_target=False)
        final1, _, grip1 = fly(make_cfg(retry_limit=1), see_target=False)
        assert final1.state is MissionState.ABORT
        assert final1.abort_reason == "retries"
        assert final1.retries_left == 0
        # the retry flew a second full sweep, so the mission ran much longer
        assert len(grip1) > 1.3 * len(grip0)

    def test_zero_retries_aborts_immediately_after_sweep(self):
        cfg = make_cfg(retry_limit=0)
        final, trace, _ = fly(cfg, see_target=False)
        assert final.state is MissionState.ABORT
        assert trace.count(MissionState.SEARCH) == 1

    def test_target_lost_in_approach_returns_to_search(self):
        cfg = make_cfg(target_timeout_ticks=5)
        st = MissionStatus(
            state=MissionState.APPROACH,
            state_entry_tick=1000,
            home=(0.0, 0.0, 0.0),
            retries_left=2,
        )
        inputs = MissionInputs(
            est_pose=Pose.from_yaw_translation(0.0, vec3(1.0, 0.5, -1.0)),
            tick=1100,
            fused=FusedTarget(TARGET, 10, 1.0, 0.0),
            fused_tick=1000,  # stale: 100 ticks > timeout of 5
        )
        st2, sp = step(st, inputs, cfg, k=K)
        assert st2.state is MissionState.SEARCH
        assert st2.retries_left == 1
        assert st2.locked_target is None
        assert sp.gripper == "open"

    def test_target_lost_in_descend_returns_to_search(self):
        cfg = make_cfg()
        st = MissionStatus(
            state=MissionState.DESCEND,
            state_entry_tick=2000,
            home=(0.0, 0.0, 0.0),
            retries_left=1,
            locked_target=tuple(TARGET),
        )
        inputs = MissionInputs(
            est_pose=Pose.from_yaw_translation(0.0, vec3(1.0, 0.5, -0.6)),
            tick=2001,
            fused=None,
            fused_tick=-1,
        )
        st2, _ = step(st, inputs, cfg, k=K)
        assert st2.state is MissionState.SEARCH
        assert st2.retries_left == 0

    def test_state_timeout_aborts(self):
        cfg = make_cfg(timeouts={"Takeoff": 10})
        st = MissionStatus(state=MissionState.TAKEOFF, state_entry_tick=0,
                           home=(0.0, 0.0, 0.0), retries_left=2)
        inputs = MissionInputs(
            est_pose=Pose.from_yaw_translation(0.0, vec3(0, 0, -0.1)), tick=50
        )
        st2, _ = step(st, inputs, cfg, k=K)
        assert st2.state is MissionState.ABORT
        assert st2.abort_reason == "timeout:Takeoff"

    def test_terminal_states_are_absorbing(self):
        cfg = make_cfg()
        for terminal in (MissionState.DONE, MissionState.ABORT):
            st = MissionStatus(state=terminal, home=(0, 0, 0), retries_left=2)
            inputs = MissionInputs(
                est_pose=Pose.from_yaw_translation(0.0, vec3(0, 0, -1)), tick=99
            )
            st2, sp = step(st, inputs, cfg, k=K)
            assert st2.state is terminal
            assert sp.gripper == "open"


states_strategy = st.sampled_from(list(MissionState))
coords = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@settings(max_examples=150, deadline=None)
@given(
    states_strategy,
    coords, coords, st.floats(-2, 0.1),
    st.integers(0, 5000),
    st.booleans(),
    st.integers(0, 3),
    st.integers(0, 300),
)
def test_step_total_function(state, x, y, z, tick, has_fused, retries, frames):
    """step() never raises on any reachable (status, inputs) combination and
    always returns a finite setpoint with a valid gripper command."""
    cfg = make_cfg()
    st0 = MissionStatus(
        state=state,
        state_entry_tick=max(0, tick - 10),
        home=(0.0, 0.0, 0.0),
        retries_left=retries,
        locked_target=(x, y, z),
        refine_points=((x, y, z),),
    )
    fused = FusedTarget(np.array([x, y, z]), 5, 1.0, 0.01) if has_fused else None
    inputs = MissionInputs(
        est_pose=Pose.from_yaw_translation(0.1, vec3(x, y, z)),
        tick=tick,
        frames_used=frames,
        fused=fused,
        fused_tick=tick if has_fused else -1,
        fused_fresh=has_fused,
    )
    st1, sp = step(st0, inputs, cfg, k=K)
    assert isinstance(st1.state, MissionState)
    assert isinstance(sp, Setpoint)
    assert np.all(np.isfinite(sp.position))
    assert sp.gripper in ("open", "closed")
    assert -math.pi < sp.yaw <= math.pi
