"""Feedback particle filter on SO(3) in quaternion coordinates."""
from __future__ import annotations

import numpy as np

from .so3 import covariance_sqrt, exp_axis_angle, quat_average, quat_multiply


class FilterDivergence(FloatingPointError):
    pass


def h_hat(h_vals):
    return np.mean(np.asarray(h_vals, dtype=float), axis=0)


def innovation(dz, h_i, h_mean, dt):
    """Modified innovation ``ΔZ - (h_i + ĥ) Δt / 2``; broadcasts over particles."""
    return np.asarray(dz) - 0.5 * (np.asarray(h_i) + np.asarray(h_mean)) * dt


def quat_increment(q, dnu):
    """Advance ``q`` by the exact group increment ``q ⊗ exp(Δν)``."""
    return quat_multiply(q, exp_axis_angle(dnu))


def fpf_step(q, dz, omega, dt, process_cov, solver, sensors, rng, n_sub=1):
    """Advance an ``(N, 4)`` ensemble over one measurement interval.

    The increment ``dz`` and the interval are split into ``n_sub`` equal
    sub-intervals; ``ĥ`` and the gain are recomputed at the start of each.
    Measurements are whitened with ``sensors.channel_std`` before use.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    q = np.asarray(q, dtype=float)
    root = covariance_sqrt(process_cov)
    sub_dt = dt / n_sub
    sub_dz = np.asarray(dz, dtype=float) / n_sub / sensors.channel_std
    for _ in range(n_sub):
        h_vals = sensors.whitened_h(q)
        h_mean = h_hat(h_vals)
        gain = solver(q, h_vals, h_mean, sensors.whitened_lie_derivative(q))
        d_innov = innovation(sub_dz, h_vals, h_mean, sub_dt)
        noise = rng.standard_normal((len(q), 3)) @ root.T * np.sqrt(sub_dt)
        dnu = omega * sub_dt + noise + np.einsum("inj,ij->in", gain, d_innov)
        bad = ~np.all(np.isfinite(dnu), axis=1)
        if np.any(bad):
            raise FilterDivergence(f"non-finite particle update at particle {int(np.argmax(bad))}")
        q = quat_increment(q, dnu)
    return q


def estimate(q):
    return quat_average(q)


class FeedbackParticleFilter:
    """Particle ensemble plus the plumbing the benchmark needs (same ``step`` as the Kalman filters)."""

    def __init__(self, particles, solver, sensors, process_cov, rng, kind="fpf"):
        self.q = np.array(particles, dtype=float)
        if self.q.ndim != 2 or self.q.shape[1] != 4 or len(self.q) < 2:
            raise ValueError("need an (N, 4) ensemble with N >= 2")
        self.solver = solver
        self.sensors = sensors
        self.process_cov = np.asarray(process_cov, dtype=float)
        self.rng = rng
        self.kind = kind

    def step(self, omega, dt, dz):
        self.q = fpf_step(self.q, dz, omega, dt, self.process_cov, self.solver, self.sensors, self.rng)

    def estimate(self):
        return estimate(self.q)
