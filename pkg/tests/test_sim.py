import math

import numpy as np
import pytest

from skygrasp.archetypes import make_scenario
from skygrasp.camera import PrimitiveShape
from skygrasp.mission import Setpoint
from skygrasp.scenario import DownwashParams, NoiseModel, VehicleParams
from skygrasp.se3 import Pose, UnitQuaternion, vec3
from skygrasp.sim import (
    NoiseState,
    VehicleState,
    apply_downwash,
    apply_slam_noise,
    batch_run,
    evaluate_grasp,
    noisy_profile_trajectories,
    run_scenario,
    scripted_profile,
    step_vehicle,
)


def make_vehicle(pos=(0.0, 0.0, 0.0), yaw=0.0, velocity=(0.0, 0.0, 0.0)):
    p = Pose.from_yaw_translation(yaw, np.asarray(pos, float))
    return VehicleState(true_pose=p, velocity=np.asarray(velocity, float), estimated_pose=p)


def sp(pos, yaw=0.0, gripper="open", t=0):
    return Setpoint(np.asarray(pos, float), yaw, gripper, t)


class TestStepVehicle:
    def test_first_order_step_response(self):
        # kp = 2: the 95% settling time of x' = kp (x_sp - x) is 3/kp = 1.5 s
        params = VehicleParams(kp=2.0, v_max=100.0)
        v = make_vehicle()
        dt = 0.005
        for _ in range(int(1.5 / dt)):
            v = step_vehicle(v, sp([1.0, 0, 0]), dt, params)
        assert v.true_pose.translation[0] > 0.95
        assert v.true_pose.translation[0] < 1.0

    def test_speed_clamp(self):
        params = VehicleParams(kp=2.0, v_max=1.5)
        v = make_vehicle()
        v = step_vehicle(v, sp([100.0, 0, 0]), 0.01, params)
        assert np.linalg.norm(v.velocity) == pytest.approx(1.5)
        assert v.true_pose.translation[0] == pytest.approx(0.015)

    def test_yaw_tracks_shortest_way(self):
        params = VehicleParams()
        v = make_vehicle(yaw=3.0)
        v = step_vehicle(v, sp([0, 0, 0], yaw=-3.0), 0.01, params)
        # wraps through pi rather than sweeping through zero
        assert v.true_pose.rotation.yaw() > 3.0 or v.true_pose.rotation.yaw() < -3.0

    def test_gripper_follows_setpoint(self):
        v = step_vehicle(make_vehicle(), sp([0, 0, 0], gripper="closed"), 0.01, VehicleParams())
        assert v.gripper == "closed"

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step_vehicle(make_vehicle(), sp([0, 0, 0]), 0.0, VehicleParams())


class TestNoiseState:
    def test_zero_model_gives_truth(self):
        n = NoiseState(NoiseModel.zero(), 200)
        for _ in range(100):
            terr, yerr = n.advance(1.0)
            assert np.all(terr == 0.0)
            assert yerr == 0.0

    def test_jitter_magnitude_constant(self):
        model = NoiseModel(sigma_walk=0.0, sigma_jitter=0.02, k_v=0.5, sigma_yaw=0.0)
        n = NoiseState(model, 200)
        for speed in (0.0, 1.0, 2.0):
            expected = 0.02 * (1.0 + 0.5 * speed)
            for _ in range(20):
                terr, _ = n.advance(speed)
                assert np.linalg.norm(terr) == pytest.approx(expected, rel=1e-12)

    def test_seed_determinism(self):
        m = NoiseModel(seed=5)
        a = NoiseState(m, 200)
        b = NoiseState(m, 200)
        for _ in range(50):
            ta, ya = a.advance(0.7)
            tb, yb = b.advance(0.7)
            assert np.array_equal(ta, tb)
            assert ya == yb

    def test_apply_slam_noise_zero_is_identity(self):
        v = make_vehicle(pos=(1, 2, -1), yaw=0.4)
        est = apply_slam_noise(v.true_pose, v, NoiseState(NoiseModel.zero(), 200))
        assert np.array_equal(est.translation, v.true_pose.translation)
        assert est.rotation.yaw() == pytest.approx(0.4, abs=1e-12)


class TestEvaluateGrasp:
    CUP = PrimitiveShape("cylinder", (0.05, 0.12), Pose(UnitQuaternion.identity(), vec3(1.0, 0.0, -0.06)))
    PARAMS = VehicleParams()
    OFFSET = 0.12

    def vehicle_with_gripper_at(self, x, y, gz):
        return make_vehicle(pos=(x, y, gz - self.OFFSET))

    def test_success_mid_object(self):
        v = self.vehicle_with_gripper_at(1.0, 0.0, -0.06)
        out = evaluate_grasp(v, self.CUP, self.OFFSET, self.PARAMS)
        assert out.success
        assert out.failure_mode == "none"
        assert out.horizontal_error == pytest.approx(0.0)

    def test_horizontal_miss(self):
        v = self.vehicle_with_gripper_at(1.0 + 0.10, 0.0, -0.06)
        out = evaluate_grasp(v, self.CUP, self.OFFSET, self.PARAMS)
        assert not out.success
        assert out.failure_mode == "horizontal_miss"
        assert out.horizontal_error == pytest.approx(0.10)

    def test_closed_above_object(self):
        # cup top is at z = -0.12; closing 5 cm above it means gripper z = -0.17
        v = self.vehicle_with_gripper_at(1.0, 0.0, -0.17)
        out = evaluate_grasp(v, self.CUP, self.OFFSET, self.PARAMS)
        assert not out.success
        assert out.failure_mode == "closed_above_object"

    def test_min_wrap_enforced_at_base(self):
        # exactly at the base leaves nothing below the fingers
        v = self.vehicle_with_gripper_at(1.0, 0.0, 0.0)
        out = evaluate_grasp(v, self.CUP, self.OFFSET, self.PARAMS)
        assert not out.success
        v2 = self.vehicle_with_gripper_at(1.0, 0.0, -0.011)
        assert evaluate_grasp(v2, self.CUP, self.OFFSET, self.PARAMS).success

    def test_object_shifted_classification(self):
        v = self.vehicle_with_gripper_at(1.0 + 0.10, 0.0, -0.06)
        out = evaluate_grasp(
            v, self.CUP, self.OFFSET, self.PARAMS, original_centroid=(0.9, -0.05)
        )
        assert out.failure_mode == "object_shifted"

    def test_capture_radius_boundary(self):
        inside = self.vehicle_with_gripper_at(1.0 + self.PARAMS.capture_radius - 1e-6, 0.0, -0.06)
        assert evaluate_grasp(inside, self.CUP, self.OFFSET, self.PARAMS).success
        outside = self.vehicle_with_gripper_at(1.0 + self.PARAMS.capture_radius + 1e-6, 0.0, -0.06)
        assert not evaluate_grasp(outside, self.CUP, self.OFFSET, self.PARAMS).success


class TestDownwash:
    SHAPE = PrimitiveShape("cylinder", (0.05, 0.12), Pose(UnitQuaternion.identity(), vec3(1.0, 0.0, -0.06)))

    def test_disabled_is_noop(self):
        v = make_vehicle(pos=(1.0, 0.0, -0.3))
        rng = np.random.default_rng(0)
        out = apply_downwash(self.SHAPE, v, DownwashParams(enabled=False), 50.0, 0.005, rng)
        assert out is self.SHAPE

    def test_too_high_is_noop(self):
        v = make_vehicle(pos=(1.0, 0.0, -2.0))
        rng = np.random.default_rng(0)
        out = apply_downwash(self.SHAPE, v, DownwashParams(enabled=True), 50.0, 0.005, rng)
        assert out is self.SHAPE

    def test_outside_cone_is_noop(self):
        v = make_vehicle(pos=(2.0, 0.0, -0.3))
        rng = np.random.default_rng(0)
        out = apply_downwash(self.SHAPE, v, DownwashParams(enabled=True), 50.0, 0.005, rng)
        assert out is self.SHAPE

    def test_pushes_radially_outward_with_cap(self):
        v = make_vehicle(pos=(0.9, 0.0, -0.2))
        rng = np.random.default_rng(0)
        params = DownwashParams(enabled=True, gain=1.0, max_step=0.002)  # huge gain -> cap
        out = apply_downwash(self.SHAPE, v, params, 50.0, 0.005, rng)
        delta = out.centroid - self.SHAPE.centroid
        assert delta[2] == 0.0
        assert np.linalg.norm(delta[:2]) == pytest.approx(0.002)
        assert delta[0] > 0  # away from the vehicle

    def test_lighter_objects_move_more(self):
        v = make_vehicle(pos=(0.9, 0.0, -0.2))
        params = DownwashParams(enabled=True, gain=1e-6, max_step=1.0)
        rng = np.random.default_rng(0)
        d_light = np.linalg.norm(
            apply_downwash(self.SHAPE, v, params, 20.0, 0.005, rng).centroid
            - self.SHAPE.centroid
        )
        d_heavy = np.linalg.norm(
            apply_downwash(self.SHAPE, v, params, 200.0, 0.005, rng).centroid
            - self.SHAPE.centroid
        )
        assert d_light == pytest.approx(10 * d_heavy, rel=1e-9)


class TestScriptedProfile:
    def test_shape_and_monotonic_times(self):
        times, positions, speeds = scripted_profile()
        assert len(times) == len(positions) == len(speeds)
        assert np.all(np.diff(times) > 0)
        assert positions.shape[1] == 3

    def test_contains_fast_descent_leg(self):
        _, _, speeds = scripted_profile()
        assert speeds.max() == pytest.approx(1.2)

    def test_noisy_trajectories_aligned(self):
        est, ref = noisy_profile_trajectories(NoiseModel(seed=1))
        assert len(est) == len(ref)
        assert np.array_equal(est.times(), ref.times())
        # zero-noise model reproduces the truth exactly
        est0, ref0 = noisy_profile_trajectories(NoiseModel.zero())
        assert np.array_equal(est0.positions(), ref0.positions())


class TestRunScenario:
    def test_noise_free_mission_succeeds(self):
        log = run_scenario(make_scenario("bottle_upright", seed=0, noise="zero"))
        assert log.success
        assert log.final_state == "Done"
        assert log.outcome.failure_mode == "none"
        assert log.frames_used <= 400
        # zero noise: the estimate is the truth
        assert np.array_equal(log.estimate.positions(), log.truth.positions())

    def test_run_deterministic(self):
        cfg = make_scenario("ramen_cup", seed=3)
        a = run_scenario(cfg)
        b = run_scenario(cfg)
        assert a.success == b.success
        assert a.ticks == b.ticks
        assert a.mission_records == b.mission_records
        assert np.array_equal(a.estimate.positions(), b.estimate.positions())

    def test_log_contents(self, tmp_path):
        log = run_scenario(make_scenario("ball", seed=0, noise="zero"))
        out = tmp_path / "run"
        log.write(str(out))
        assert (out / "truth.tum").exists()
        assert (out / "estimate.tum").exists()
        assert (out / "mission.jsonl").exists()
        assert (out / "outcome.json").exists()
        assert (out / "candidates.ply").exists()
        import json

        rec = json.loads((out / "outcome.json").read_text())
        assert rec["success"] is True
        assert rec["grasp"]["failure_mode"] == "none"

    def test_batch_bookkeeping(self):
        cfg = make_scenario("pouch", seed=0, noise="zero")
        row = batch_run(cfg, seeds=[0, 1])
        assert row.attempts == 2
        assert row.successes + sum(row.failure_histogram.values()) == 2
        assert row.name == "pouch"
        assert 0.0 <= row.success_rate <= 1.0

    def test_batch_needs_seeds(self):
        with pytest.raises(ValueError):
            batch_run(make_scenario("pouch", seed=0), seeds=[])
