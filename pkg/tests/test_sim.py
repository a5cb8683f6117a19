from dataclasses import replace

import numpy as np
import pytest

from fpf_attitude import sim, so3
from conftest import random_quats


def test_angular_velocity_values():
    np.testing.assert_allclose(sim.angular_velocity(0.0), [0.0, -np.sin(np.pi / 20), 1.0], atol=1e-15)
    np.testing.assert_allclose(sim.angular_velocity(0.0)[1], -0.156434, atol=1e-6)
    assert sim.angular_velocity(7.5)[0] == pytest.approx(0.0, abs=1e-15)
    assert sim.angular_velocity(17.0)[2] == pytest.approx(1.0)


def test_reference_vectors():
    np.testing.assert_allclose(sim.GRAVITY_REF, [0, 0, -1])
    np.testing.assert_allclose(sim.MAGNETIC_REF, [1 / np.sqrt(2), 0, 1 / np.sqrt(2)])


def test_h_at_identity():
    np.testing.assert_allclose(sim.h_eval(so3.IDENTITY), np.concatenate([sim.GRAVITY_REF, sim.MAGNETIC_REF]))


def test_h_invariant_under_rotation_about_reference():
    q = so3.exp_axis_angle([0, 0, np.pi])
    np.testing.assert_allclose(sim.h_eval(q)[:3], [0, 0, -1], atol=1e-15)


def test_h_blocks_unit_norm(rng):
    h = sim.h_eval(random_quats(rng, 50)).reshape(50, 2, 3)
    np.testing.assert_allclose(np.linalg.norm(h, axis=-1), 1.0, atol=1e-10)


def test_sensor_model_matches_h_eval(rng):
    q = random_quats(rng, 5)
    model = sim.ScenarioConfig().sensors
    np.testing.assert_allclose(model.h(q), sim.h_eval(q))


def test_lie_derivative_of_h_matches_finite_differences(rng, unit_sensors):
    q = random_quats(rng, 30)
    step = 1e-5
    for n in range(3):
        e = np.zeros(3)
        e[n] = step
        fd = (unit_sensors.h(so3.quat_multiply(q, so3.exp_axis_angle(e))) - unit_sensors.h(so3.quat_multiply(q, so3.exp_axis_angle(-e)))) / (2 * step)
        np.testing.assert_allclose(unit_sensors.lie_derivative(q)[:, n, :], fd, atol=1e-6)


class TestPropagation:
    def test_still_without_noise(self, rng, monkeypatch):
        monkeypatch.setattr(sim, "angular_velocity", lambda t: np.zeros(3))
        q = so3.normalize([0.1, 0.9, -0.3, 0.2])
        np.testing.assert_allclose(sim.propagate_truth(q, 0.0, 0.1, np.zeros((3, 3)), rng), q, atol=1e-15)

    def test_constant_rate_is_axis_angle(self, rng, monkeypatch):
        w = np.array([0.3, -0.2, 0.5])
        monkeypatch.setattr(sim, "angular_velocity", lambda t: w)
        q = so3.normalize([0.1, 0.9, -0.3, 0.2])
        out = sim.propagate_truth(q, 0.0, 0.2, np.zeros((3, 3)), rng)
        np.testing.assert_allclose(out, so3.quat_multiply(q, so3.exp_axis_angle(w * 0.2)), atol=1e-15)

    def test_unit_norm_with_noise(self, rng):
        q = so3.IDENTITY
        for k in range(100):
            q = sim.propagate_truth(q, k * 0.01, 0.01, 0.3 * np.eye(3), rng)
        assert abs(np.linalg.norm(q) - 1) < 1e-12

    def test_steps_compose_for_constant_rate(self, rng, monkeypatch):
        w = np.array([0.7, 0.1, -0.4])
        monkeypatch.setattr(sim, "angular_velocity", lambda t: w)
        q0 = so3.normalize([0.3, 0.3, 0.5, 0.2])
        q = q0
        for k in range(10):
            q = sim.propagate_truth(q, 0.0, 0.05, np.zeros((3, 3)), rng)
        np.testing.assert_allclose(q, sim.propagate_truth(q0, 0.0, 0.5, np.zeros((3, 3)), rng), atol=1e-10)

    def test_time_varying_rate_splitting_error_is_second_order(self, rng):
        q0 = so3.normalize([0.3, 0.3, 0.5, 0.2])
        zero = np.zeros((3, 3))

        def run(n, span=1.0):
            q = q0
            for k in range(n):
                q = sim.propagate_truth(q, k * span / n, span / n, zero, rng)
            return q

        reference = run(4096)
        errors = [so3.rotation_angle_error(reference, run(n)) for n in (16, 32, 64)]
        # local error O(dt^2) => global O(dt); each local step error shrinks 4x
        local = [e / n for e, n in zip(errors, (16, 32, 64))]
        assert local[0] / local[1] == pytest.approx(4, rel=0.15)
        assert local[1] / local[2] == pytest.approx(4, rel=0.15)


class TestMeasurement:
    def test_noise_free(self, rng):
        q = so3.normalize([0.2, 0.4, -0.1, 0.9])
        dz = sim.measure(q, 0.01, np.zeros((3, 3)), rng)
        np.testing.assert_allclose(dz / 0.01, sim.h_eval(q), atol=1e-14)

    def test_moments(self, rng):
        q = so3.normalize([0.2, 0.4, -0.1, 0.9])
        dt, std = 0.01, 0.3
        draws = np.array([sim.measure(q, dt, std**2 * np.eye(3), rng) for _ in range(100_000)])
        mean_se = std * np.sqrt(dt) / np.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - sim.h_eval(q) * dt) < 3 * mean_se)
        np.testing.assert_allclose(draws.var(axis=0), std**2 * dt, rtol=0.05)


class TestScenarioConfig:
    def test_presets(self):
        a, b = sim.ScenarioConfig.preset("a"), sim.ScenarioConfig.preset("b")
        assert np.rad2deg(a.init_std) == pytest.approx(30)
        assert np.rad2deg(a.sensor_std) == pytest.approx(10)
        assert a.truth_init == "prior"
        assert np.rad2deg(b.init_std) == pytest.approx(60)
        assert np.rad2deg(b.sensor_std) == pytest.approx(30)
        assert np.rad2deg(b.process_std) == pytest.approx(5)
        truth = np.array(b.truth_init)
        axis = np.array([3, 1, 4]) / np.sqrt(26)
        np.testing.assert_allclose(truth, [0, *axis], atol=1e-15)
        assert (a.n_steps, a.dt, a.horizon) == (200, 0.01, 2.0)

    def test_table_numeral_convention(self):
        b = sim.ScenarioConfig.preset("b", "table-numeral")
        # table numerals are per-step standard deviations of the degree labels' intensities
        assert b.sensor_std == pytest.approx(0.05236, abs=1e-5)
        assert b.process_std == pytest.approx(0.008727, abs=1e-6)
        assert b.init_std == pytest.approx(1.0472, abs=1e-4)

    def test_sub_interval_schedule(self):
        a = sim.ScenarioConfig.preset("a")
        assert [a.sub_intervals(k, "fpf-g") for k in range(4)] == [100, 100, 100, 1]
        assert [a.sub_intervals(k, "iekf") for k in range(4)] == [30, 30, 30, 1]
        assert sim.ScenarioConfig.preset("b").sub_intervals(0, "fpf-k") == 20

    def test_from_dict_accepts_degrees(self):
        cfg = sim.ScenarioConfig.from_dict({"scenario": "b", "sensor_std_deg": 15, "horizon": 1.0})
        assert cfg.sensor_std == pytest.approx(np.deg2rad(15))
        assert cfg.horizon == 1.0 and cfg.name == "b"

    @pytest.mark.parametrize(
        "changes",
        [{"dt": 0.0}, {"horizon": 0.001}, {"r_g": (0.0, 0.0, 2.0)}, {"nf_other": 0}, {"noise_convention": "x"}],
    )
    def test_validation(self, changes):
        with pytest.raises(ValueError):
            replace(sim.ScenarioConfig(), **changes)

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            sim.ScenarioConfig.from_dict({"bogus": 1})


def test_simulate_is_reproducible():
    cfg = replace(sim.ScenarioConfig.preset("a"), horizon=0.1)
    a = sim.simulate(cfg, np.random.default_rng(1), np.random.default_rng(2))
    b = sim.simulate(cfg, np.random.default_rng(1), np.random.default_rng(2))
    np.testing.assert_array_equal(a.dz, b.dz)
    np.testing.assert_array_equal(a.truth, b.truth)
    assert a.dz.shape == (10, 6) and a.truth.shape == (11, 4)
