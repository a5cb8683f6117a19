import numpy as np
import pytest
from hypothesis import given, settings

from fpf_attitude import baselines, sim, so3
from fpf_attitude.baselines import IEKF, MEKF, UKF
from conftest import rotation_vectors

FILTERS = [IEKF, MEKF, UKF]


def sensors(std=1.0):
    return sim.SensorModel(refs=np.array([sim.GRAVITY_REF, sim.MAGNETIC_REF]), noise_std=np.full(2, std))


def perfect_dz(q, s, dt):
    return s.h(q) * dt


def random_spd(rng, scale=0.05):
    A = rng.standard_normal((3, 3))
    return scale * (A @ A.T + 0.1 * np.eye(3))


@pytest.mark.parametrize("cls", FILTERS)
def test_zero_innovation_leaves_mean_unchanged(cls):
    q = so3.normalize([0.9, 0.1, -0.2, 0.3])
    s = sensors()
    filt = cls(q, 0.1 * np.eye(3), s, np.zeros((3, 3)))
    for Ys, rs in filt._blocks(perfect_dz(q, s, 0.01), 0.01):
        filt.update(np.concatenate(Ys), rs)
    np.testing.assert_allclose(filt.state.q, q, atol=1e-14)


@pytest.mark.parametrize("cls", FILTERS)
def test_propagation_adds_process_covariance(cls):
    P0 = np.diag([0.1, 0.2, 0.3])
    Q = np.diag([1.0, 2.0, 3.0])
    filt = cls(so3.IDENTITY, P0, sensors(), Q)
    filt.propagate(np.zeros(3), 0.01)
    np.testing.assert_allclose(filt.state.P, P0 + 0.01 * Q, atol=1e-15)


def test_mekf_transition_rotates_covariance():
    P0 = np.diag([0.1, 0.2, 0.3])
    filt = MEKF(so3.IDENTITY, P0, sensors(), np.zeros((3, 3)))
    w = np.array([1.0, -2.0, 0.5])
    filt.propagate(w, 0.01)
    Lam = np.eye(3) - so3.skew(w * 0.01)
    np.testing.assert_allclose(filt.state.P, Lam @ P0 @ Lam.T, atol=1e-15)


@pytest.mark.parametrize("cls", FILTERS)
def test_update_contracts_covariance(cls, rng):
    for _ in range(10):
        P = random_spd(rng)
        q = so3.normalize(rng.standard_normal(4))
        filt = cls(q, P, sensors(0.3), np.zeros((3, 3)))
        dz = sim.measure(q, 0.01, 0.09 * np.eye(3), rng)
        filt.step(np.zeros(3), 0.01, dz)
        assert np.linalg.eigvalsh(P - filt.state.P).min() > -1e-12
        np.testing.assert_allclose(filt.state.P, filt.state.P.T, atol=1e-12)


def test_mrp_examples():
    np.testing.assert_allclose(baselines.mrp_to_rotation(np.zeros(3)), np.eye(3))
    np.testing.assert_allclose(baselines.mrp_to_quat([1.0, 0, 0]), [0, 1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(baselines.mrp_to_rotation([1.0, 0, 0]), np.diag([1.0, -1, -1]), atol=1e-15)


@given(rotation_vectors(np.pi - 1e-6))
@settings(max_examples=100)
def test_mrp_round_trip(v):
    a = baselines.mrp_from_quat(so3.exp_axis_angle(v))
    assert np.linalg.norm(a) <= 1 + 1e-12
    np.testing.assert_allclose(baselines.mrp_to_rotation(a), so3.rotation_exp(v), atol=1e-10)


def test_mrp_shadow_set():
    q = so3.exp_axis_angle([0.0, 0.0, 1.0])
    np.testing.assert_allclose(baselines.mrp_from_quat(-q), baselines.mrp_from_quat(q))


def test_scaled_error_matches_rotation_vector_to_first_order():
    v = np.array([1e-4, -2e-4, 3e-4])
    np.testing.assert_allclose(baselines.error_to_quat(v), so3.exp_axis_angle(v), atol=1e-11)


def test_sigma_weights():
    wm, wc, lam = baselines.sigma_weights()
    assert wm.sum() == pytest.approx(1.0)
    assert wc.sum() == pytest.approx(1.0)
    assert lam == 0.0


def test_cholesky_failure_floors_and_warns():
    with pytest.warns(RuntimeWarning):
        L = baselines._matrix_sqrt(np.diag([1.0, 0.0, -1e-18]))
    assert np.all(np.isfinite(L))


def test_repair_covariance():
    P = np.array([[1.0, 2.0, 0], [2.0, 1.0, 0], [0, 0, 1.0]])
    fixed = baselines.repair_covariance(P)
    assert np.linalg.eigvalsh(fixed).min() >= -1e-15
    np.testing.assert_allclose(fixed, fixed.T)


def test_whitening_gives_unit_noise(rng):
    std, dt = 0.2, 0.01
    n = 20000
    dz = std * np.sqrt(dt) * rng.standard_normal((n, 3))
    Y, r = baselines.whiten(dz, np.array([0, 0, -1.0]), std, dt)
    assert np.std(Y) == pytest.approx(1.0, rel=0.02)
    np.testing.assert_allclose(r, [0, 0, -np.sqrt(dt) / std])


def test_innovations_differ_by_frame(rng):
    q = so3.normalize(rng.standard_normal(4))
    s = sensors(0.5)
    dz = sim.measure(q, 0.01, 0.25 * np.eye(3), rng)
    q_hat = so3.quat_multiply(q, so3.exp_axis_angle([0.1, 0.0, -0.05]))
    i_filt = IEKF(q_hat, 0.1 * np.eye(3), s, np.zeros((3, 3)))
    m_filt = MEKF(q_hat, 0.1 * np.eye(3), s, np.zeros((3, 3)))
    Ys, r = m_filt._blocks(dz, 0.01)[0]
    Y = Ys[0]
    R = so3.quat_to_rotation(q_hat)
    np.testing.assert_allclose(i_filt.innovation(Y, r), R @ m_filt.innovation(Y, r), atol=1e-12)


def _small_error_run(cls, sequential=True, steps=50):
    rng = np.random.default_rng(7)
    s = sensors(np.deg2rad(1.0))
    q_true = so3.IDENTITY
    q0 = so3.exp_axis_angle(np.deg2rad([0.5, -0.4, 0.3]))
    filt = cls(q0, np.deg2rad(1.0) ** 2 * np.eye(3), s, np.deg2rad(0.1) ** 2 * np.eye(3), sequential=sequential)
    out = []
    for k in range(steps):
        dz = sim.measure(q_true, 0.01, np.deg2rad(1.0) ** 2 * np.eye(3), rng)
        filt.step(np.zeros(3), 0.01, dz)
        out.append(filt.estimate())
    return np.array(out)


@pytest.mark.parametrize("cls", [IEKF, UKF])
def test_small_error_agreement_with_mekf(cls):
    ref = _small_error_run(MEKF)
    other = _small_error_run(cls)
    assert np.rad2deg(so3.rotation_angle_error(other, ref)).max() < 0.05


@pytest.mark.parametrize("cls", FILTERS)
def test_sequential_vs_stacked(cls):
    seq = _small_error_run(cls, sequential=True)
    stacked = _small_error_run(cls, sequential=False)
    assert np.rad2deg(so3.rotation_angle_error(seq, stacked)).max() < 0.1


@pytest.mark.parametrize("cls", FILTERS)
def test_orthogonality_over_long_run(cls):
    rng = np.random.default_rng(2)
    s = sensors(0.2)
    q_true = so3.IDENTITY
    filt = cls(so3.exp_axis_angle([0.5, 0.2, -0.3]), 0.3 * np.eye(3), s, 0.01 * np.eye(3))
    for k in range(200):
        t = k * 0.01
        q_true = sim.propagate_truth(q_true, t, 0.01, 0.01 * np.eye(3), rng)
        filt.step(sim.angular_velocity(t), 0.01, sim.measure(q_true, 0.01, 0.04 * np.eye(3), rng))
        R = filt.state.R
        assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-9
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("fn,cls", [(baselines.iekf_step, IEKF), (baselines.mekf_step, MEKF), (baselines.ukf_step, UKF)])
def test_functional_wrappers_are_pure(fn, cls, rng):
    s = sensors(0.3)
    state = baselines.GaussianFilterState(q=so3.IDENTITY.copy(), P=0.1 * np.eye(3))
    dz = sim.measure(so3.IDENTITY, 0.01, 0.09 * np.eye(3), rng)
    out = fn(state, np.array([0.1, 0, 0]), 0.01, dz, s, 0.01 * np.eye(3))
    np.testing.assert_array_equal(state.q, so3.IDENTITY)
    filt = cls(so3.IDENTITY, 0.1 * np.eye(3), s, 0.01 * np.eye(3))
    filt.step(np.array([0.1, 0, 0]), 0.01, dz)
    np.testing.assert_array_equal(out.q, filt.state.q)
