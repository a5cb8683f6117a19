"""Discrete-time Gaussian attitude filters: invariant EKF, multiplicative EKF and UKF.

All three keep the mean as a unit quaternion and apply corrections through the
group, so the estimate never leaves SO(3). Measurements arrive as increments
``ΔZ`` over a step ``Δt``; each sensor block is turned into ``Y = ΔZ / Δt`` and
whitened by its noise level ``σ / sqrt(Δt)`` so that the innovation noise is
the identity, as the textbook gain formulas assume.

The MEKF and UKF error coordinate is the modified Rodrigues parameter scaled
by four, ``a = 4 q_V / (1 + q0)``, which agrees with the rotation vector to
first order. That keeps ``H = [R̂ᵀ r]×`` and the covariance in rad².
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .so3 import exp_axis_angle, normalize, quat_multiply, quat_to_rotation, skew

MRP_SCALE = 4.0


def mrp_to_quat(a):
    a = np.asarray(a, dtype=float)
    n2 = np.sum(a * a, axis=-1, keepdims=True)
    return np.concatenate([(1 - n2) / (1 + n2), 2 * a / (1 + n2)], axis=-1)


def mrp_to_rotation(a):
    """Rotation for the modified Rodrigues parameter ``a`` (|a| = tan(θ/4))."""
    return quat_to_rotation(mrp_to_quat(a))


def mrp_from_quat(q):
    """``a = q_V / (1 + q0)`` on the shadow set with ``|a| <= 1``."""
    q = np.asarray(q, dtype=float)
    q = np.where(q[..., :1] < 0, -q, q)
    return q[..., 1:] / (1 + q[..., :1])


def error_to_quat(a):
    """Attitude error quaternion for a scaled-MRP error state."""
    return mrp_to_quat(np.asarray(a, dtype=float) / MRP_SCALE)


def repair_covariance(P):
    """Symmetrize, and clip negative eigenvalues to zero when there are any."""
    P = 0.5 * (P + P.T)
    w, V = np.linalg.eigh(P)
    if w.min() < 0:
        P = (V * np.clip(w, 0.0, None)) @ V.T
        P = 0.5 * (P + P.T)
    return P


def whiten(dz_block, r, std, dt):
    """``(Y, r)`` scaled so that ``Y = Rᵀ r + noise`` has identity noise covariance."""
    scale = std / np.sqrt(dt)
    return dz_block / dt / scale, np.asarray(r, dtype=float) / scale


@dataclass
class GaussianFilterState:
    q: np.ndarray
    P: np.ndarray

    @property
    def R(self):
        return quat_to_rotation(self.q)


class _GaussianFilter:
    kind = "gaussian"

    def __init__(self, q0, P0, sensors, process_cov, sequential=True):
        self.state = GaussianFilterState(q=normalize(np.asarray(q0, dtype=float)), P=np.array(P0, dtype=float))
        self.sensors = sensors
        self.process_cov = np.asarray(process_cov, dtype=float)
        self.sequential = sequential

    def estimate(self):
        return self.state.q

    def _blocks(self, dz, dt):
        dz = np.asarray(dz, dtype=float)
        out = []
        for s, r in enumerate(self.sensors.refs):
            out.append(whiten(dz[3 * s : 3 * s + 3], r, self.sensors.noise_std[s], dt))
        if self.sequential:
            return [([Y], [r]) for Y, r in out]
        return [([Y for Y, _ in out], [r for _, r in out])]

    def step(self, omega, dt, dz):
        self.propagate(omega, dt)
        for Ys, rs in self._blocks(dz, dt):
            self.update(np.concatenate(Ys), rs)
        self.state.P = repair_covariance(self.state.P)


def _kalman_gain(P, H):
    S = H @ P @ H.T + np.eye(len(H))
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > 1e14:
        raise np.linalg.LinAlgError("innovation covariance is singular")
    return np.linalg.solve(S, H @ P).T


class IEKF(_GaussianFilter):
    """Left-invariant EKF: ``R = exp([η]) R̂`` with the innovation in the inertial frame."""

    kind = "iekf"

    def propagate(self, omega, dt):
        self.state.q = quat_multiply(self.state.q, exp_axis_angle(np.asarray(omega) * dt))
        self.state.P = self.state.P + dt * self.process_cov

    def innovation(self, Y, rs):
        R = self.state.R
        blocks = np.asarray(Y).reshape(-1, 3)
        return np.concatenate([R @ y - r for y, r in zip(blocks, rs)])

    def update(self, Y, rs):
        P = self.state.P
        H = np.vstack([skew(r) for r in rs])
        K = _kalman_gain(P, H)
        eta = K @ self.innovation(Y, rs)
        self.state.q = quat_multiply(exp_axis_angle(eta), self.state.q)
        self.state.P = (np.eye(3) - K @ H) @ P


class MEKF(_GaussianFilter):
    """Multiplicative EKF: ``R = R̂ δR(a)`` with the innovation in the body frame."""

    kind = "mekf"

    def propagate(self, omega, dt):
        step = np.asarray(omega) * dt
        self.state.q = quat_multiply(self.state.q, exp_axis_angle(step))
        Lam = np.eye(3) - skew(step)
        self.state.P = Lam @ self.state.P @ Lam.T + dt * self.process_cov

    def innovation(self, Y, rs):
        R = self.state.R
        return np.asarray(Y) - np.concatenate([R.T @ r for r in rs])

    def update(self, Y, rs):
        P = self.state.P
        R = self.state.R
        H = np.vstack([skew(R.T @ r) for r in rs])
        K = _kalman_gain(P, H)
        a = K @ self.innovation(Y, rs)
        self.state.q = quat_multiply(self.state.q, error_to_quat(a))
        self.state.P = (np.eye(3) - K @ H) @ P


def sigma_weights(n=3, alpha=1.0, beta=0.0, kappa=0.0):
    lam = alpha**2 * (n + kappa) - n
    wm = np.full(2 * n + 1, 1.0 / (2 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + 1 - alpha**2 + beta
    return wm, wc, lam


def _matrix_sqrt(P):
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        warnings.warn("covariance not positive definite; flooring eigenvalues", RuntimeWarning, stacklevel=3)
        w, V = np.linalg.eigh(0.5 * (P + P.T))
        return V * np.sqrt(np.clip(w, 1e-15, None))


class UKF(MEKF):
    """Unscented filter on the multiplicative error ``R = R̂ δR(a)``.

    Seven sigma points around ``a = 0`` are composed onto the predicted
    attitude and pushed through the sensor model; propagation is shared with
    the MEKF.
    """

    kind = "ukf"

    def __init__(self, q0, P0, sensors, process_cov, sequential=True, alpha=1.0, beta=0.0, kappa=0.0):
        super().__init__(q0, P0, sensors, process_cov, sequential)
        self.wm, self.wc, self.lam = sigma_weights(3, alpha, beta, kappa)

    def sigma_points(self):
        L = _matrix_sqrt((3 + self.lam) * self.state.P)
        return np.vstack([np.zeros(3), L.T, -L.T])

    def update(self, Y, rs):
        chi = self.sigma_points()
        R = self.state.R
        # sensor output at R̂ δR(χ): δRᵀ R̂ᵀ r
        dR = quat_to_rotation(error_to_quat(chi))
        refs_body = np.stack([R.T @ r for r in rs])
        Z = np.einsum("kji,sj->ksi", dR, refs_body).reshape(len(chi), -1)
        z_bar = self.wm @ Z
        x_bar = self.wm @ chi
        dZ = Z - z_bar
        dX = chi - x_bar
        Pzz = (self.wc[:, None] * dZ).T @ dZ + np.eye(Z.shape[1])
        Pxz = (self.wc[:, None] * dX).T @ dZ
        K = np.linalg.solve(Pzz, Pxz.T).T
        a = x_bar + K @ (np.asarray(Y) - z_bar)
        self.state.q = quat_multiply(self.state.q, error_to_quat(a))
        self.state.P = self.state.P - K @ Pzz @ K.T


FILTERS = {"iekf": IEKF, "mekf": MEKF, "ukf": UKF}


def _functional_step(cls, state, omega, dt, dz, sensors, process_cov, **kwargs):
    filt = cls(state.q, state.P, sensors, process_cov, **kwargs)
    filt.step(omega, dt, dz)
    return filt.state


def iekf_step(state, omega, dt, dz, sensors, process_cov, sequential=True):
    """Pure-function form of one IEKF propagate/update cycle."""
    return _functional_step(IEKF, state, omega, dt, dz, sensors, process_cov, sequential=sequential)


def mekf_step(state, omega, dt, dz, sensors, process_cov, sequential=True):
    return _functional_step(MEKF, state, omega, dt, dz, sensors, process_cov, sequential=sequential)


def ukf_step(state, omega, dt, dz, sensors, process_cov, sequential=True):
    return _functional_step(UKF, state, omega, dt, dz, sensors, process_cov, sequential=sequential)
