"""Numerical self-checks of the gain solvers, run by ``fpf-bench gain-check``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import galerkin, kernel
from .sim import GRAVITY_REF, MAGNETIC_REF, SensorModel
from .so3 import exp_axis_angle, normalize, quat_multiply


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value < self.tol)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (tol {self.tol:.0e})"


def random_quaternions(n, rng):
    return normalize(rng.standard_normal((n, 4)))


def unit_sensors():
    return SensorModel(refs=np.array([GRAVITY_REF, MAGNETIC_REF]), noise_std=np.ones(2))


def directional_derivative(f, q, n, step=1e-5):
    """Central difference of ``f(q ⊗ exp(t e_n))`` at ``t = 0``."""
    e = np.zeros(3)
    e[n] = step
    return (f(quat_multiply(q, exp_axis_angle(e))) - f(quat_multiply(q, exp_axis_angle(-e)))) / (2 * step)


def galerkin_checks(n_particles=200, seed=0):
    rng = np.random.default_rng(seed)
    sensors = unit_sensors()
    q = random_quaternions(n_particles, rng)
    h = sensors.h(q)
    h_mean = h.mean(axis=0)
    system = galerkin.assemble(q, h, h_mean)
    kappa = galerkin.solve_coefficients(system)
    residual = np.max(np.abs(system.A @ kappa - system.b))

    probe = random_quaternions(100, rng)
    fd = np.stack([directional_derivative(galerkin.basis, probe, n) for n in range(3)], axis=1)
    table_err = np.max(np.abs(fd - galerkin.lie_derivatives(probe)))

    gain = np.einsum("inl,lj->inj", system.dpsi, kappa)
    weak = np.einsum("inj,inl->lj", gain, system.dpsi) / n_particles
    weak_err = np.max(np.abs(weak - system.b))
    return [
        CheckResult("galerkin |A kappa - b|_inf", residual, 1e-10),
        CheckResult("table of E_n.psi_l vs finite differences", table_err, 1e-6),
        CheckResult("weak form (1/N) sum <grad phi, grad psi_k> = b_k", weak_err, 1e-10),
    ]


def pinned_solve(op):
    """Dense solve of ``(I - T) Φ = ε H`` on the mean-zero complement.

    The forcing is first projected onto the range of ``I - T`` by removing its
    component along the stationary distribution of ``T``.
    """
    n = len(op.T)
    w, V = np.linalg.eig(op.T.T)
    mu = np.real(V[:, np.argmin(np.abs(w - 1.0))])
    mu = mu / mu.sum()
    rhs = op.eps * op.H - mu @ (op.eps * op.H)
    M = np.vstack([np.eye(n) - op.T, np.ones((1, n))])
    rhs = np.vstack([rhs, np.zeros((1, rhs.shape[1]))])
    phi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return phi - phi.mean(axis=0)


def kernel_checks(n_particles=200, seed=0, eps=1.0, iterations=200):
    rng = np.random.default_rng(seed)
    sensors = unit_sensors()
    q = random_quaternions(n_particles, rng)
    h = sensors.h(q)
    op = kernel.build_operator(q, h, h.mean(axis=0), eps)
    row_err = np.max(np.abs(op.T.sum(axis=1) - 1.0))
    phi = kernel.fixed_point_solve(op, iterations)
    fp_err = np.max(np.abs(phi - phi.mean(axis=0) - pinned_solve(op)))
    dh = sensors.lie_derivative(q)
    base = kernel.gain_from_phi(op, phi, dh)
    shifted = kernel.gain_from_phi(op, phi + 3.7, dh)
    shift_err = np.max(np.abs(base - shifted))
    return [
        CheckResult("kernel row sums of T", row_err, 1e-12),
        CheckResult(f"kernel Picard ({iterations} sweeps) vs pinned dense solve", fp_err, 1e-8),
        CheckResult("kernel gain invariance under phi + c", shift_err, 1e-12),
    ]
