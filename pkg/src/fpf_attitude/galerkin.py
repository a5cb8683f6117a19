"""Galerkin approximation of the FPF gain with a four-function quaternion basis."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

N_BASIS = 4
COND_LIMIT = 1e12


class DegenerateSystemWarning(RuntimeWarning):
    pass


def basis(q):
    """``(2 q1 q0, 2 q2 q0, 2 q3 q0, 2 q0² - 1)`` evaluated at each quaternion, shape ``(..., 4)``."""
    q = np.asarray(q, dtype=float)
    q0 = q[..., 0]
    return np.stack([2 * q[..., 1] * q0, 2 * q[..., 2] * q0, 2 * q[..., 3] * q0, 2 * q0**2 - 1], axis=-1)


def lie_derivatives(q):
    """Closed-form ``E_n · ψ_l`` at each quaternion, shape ``(..., 3, 4)`` indexed ``[n, l]``."""
    q = np.asarray(q, dtype=float)
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    # rows: psi_l, columns: E_1, E_2, E_3
    table = np.stack(
        [
            np.stack([q0**2 - q1**2, -q1 * q2 - q3 * q0, -q1 * q3 + q2 * q0], axis=-1),
            np.stack([-q1 * q2 + q3 * q0, q0**2 - q2**2, -q2 * q3 - q1 * q0], axis=-1),
            np.stack([-q1 * q3 - q2 * q0, -q2 * q3 + q1 * q0, q0**2 - q3**2], axis=-1),
            np.stack([-2 * q1 * q0, -2 * q2 * q0, -2 * q3 * q0], axis=-1),
        ],
        axis=-2,
    )
    return np.swapaxes(table, -1, -2)


def eval_basis(q, l):
    """Basis function ``l`` (1-based) at a single quaternion."""
    return float(basis(q)[l - 1])


def eval_lie_derivative(q, l, n):
    """``E_n · ψ_l`` (both 1-based) at a single quaternion."""
    return float(lie_derivatives(q)[n - 1, l - 1])


@dataclass(frozen=True)
class GalerkinSystem:
    A: np.ndarray  # (L, L), shared by every channel
    b: np.ndarray  # (L, m), one right-hand side per channel
    dpsi: np.ndarray  # (N, 3, L) Lie derivatives at the particles


def assemble(q, h_vals, h_hat):
    q = np.atleast_2d(q)
    h_vals = np.asarray(h_vals, dtype=float).reshape(len(q), -1)
    n = len(q)
    dpsi = lie_derivatives(q)
    A = np.einsum("inl,ink->kl", dpsi, dpsi) / n
    A = 0.5 * (A + A.T)
    b = basis(q).T @ (h_vals - h_hat) / n
    return GalerkinSystem(A=A, b=b, dpsi=dpsi)


def solve_coefficients(system):
    """Solve ``A κ = b`` for every channel; falls back to a truncated pseudo-inverse when ``A`` is near singular."""
    A, b = system.A, system.b
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        warnings.warn(
            f"Galerkin matrix is near singular (cond={cond:.3e}); the ensemble may have collapsed",
            DegenerateSystemWarning,
            stacklevel=2,
        )
        return np.linalg.pinv(A, rcond=1.0 / COND_LIMIT, hermitian=True) @ b
    return np.linalg.solve(A, b)


def solve_gain(q, h_vals, h_hat):
    """Per-particle gain, shape ``(N, 3, m)``."""
    system = assemble(q, h_vals, h_hat)
    kappa = solve_coefficients(system)
    return np.einsum("inl,lj->inj", system.dpsi, kappa)


class GalerkinGain:
    """Stateless gain solver for the feedback particle filter."""

    name = "galerkin"

    def __call__(self, q, h_vals, h_hat, dh=None):
        return solve_gain(q, h_vals, h_hat)

    def reset(self):
        pass
