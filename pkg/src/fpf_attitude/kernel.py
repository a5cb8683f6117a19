"""Kernel (diffusion-map) approximation of the FPF gain.

The weighted-Laplacian semigroup is replaced by a row-stochastic Markov matrix
built from a Gaussian kernel on rotation matrices. The Poisson solution at the
particles is the fixed point of ``Φ = T Φ + ε H`` and its gradient follows by
differentiating the kernel average along each basis direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .so3 import BASIS, quat_to_rotation

TRACE_FORMS = ("transpose", "verbatim")
# coefficient multiplying ε E_n·h in the gain
H_TERMS = {"minus": -1.0, "plus": 1.0, "none": 0.0}


class BandwidthError(ValueError):
    """Every off-diagonal kernel value underflowed; the bandwidth is too small for the ensemble."""


class FixedPointError(FloatingPointError):
    pass


def gaussian_kernel(R1, R2, eps):
    R1, R2 = np.asarray(R1, dtype=float), np.asarray(R2, dtype=float)
    d2 = np.sum((R1 - R2) ** 2, axis=(-2, -1))
    return np.exp(-d2 / (4 * eps)) / (4 * np.pi * eps) ** 1.5


def pairwise_kernel(R, eps):
    """Gaussian kernel matrix between all rotations in ``R`` (shape ``(N, 3, 3)``)."""
    flat = R.reshape(len(R), 9)
    # |Ri - Rj|_F^2 = 6 - 2 <Ri, Rj>_F for rotations
    d2 = np.clip(6.0 - 2.0 * flat @ flat.T, 0.0, None)
    np.fill_diagonal(d2, 0.0)
    return np.exp(-d2 / (4 * eps)) / (4 * np.pi * eps) ** 1.5


def trace_weights(R, form="transpose"):
    """``W[n, i, j]`` weighting each kernel entry in the gradient formula.

    ``"transpose"`` is ``Tr(Rⁱ E_n Rʲᵀ)``, the derivative of ``-|Rⁱ - Rʲ|²_F / 2``
    along ``Rⁱ exp(t E_n)``. ``"verbatim"`` is ``Tr(Rⁱ E_n Rʲ)``.
    """
    if form not in TRACE_FORMS:
        raise ValueError(f"trace form must be one of {TRACE_FORMS}, got {form!r}")
    RE = np.einsum("iab,nbc->niac", R, BASIS)  # Ri E_n
    if form == "transpose":
        return np.einsum("niac,jac->nij", RE, R)
    return np.einsum("niac,jca->nij", RE, R)


@dataclass(frozen=True)
class KernelOperator:
    eps: float
    T: np.ndarray  # (N, N) row-stochastic
    S: np.ndarray  # (3, N, N)
    H: np.ndarray  # (N, m), h - h_hat at the particles


def markov_matrix(g):
    """Density-normalized kernel ``k`` and its row normalization ``T``."""
    density = g.mean(axis=1)
    root = np.sqrt(density)
    k = g / np.outer(root, root)
    return k, k / k.sum(axis=1, keepdims=True)


def build_operator(q, h_vals, h_hat, eps, trace_form="transpose"):
    if eps <= 0:
        raise ValueError(f"bandwidth must be positive, got {eps}")
    q = np.atleast_2d(q)
    n = len(q)
    if n < 2:
        raise ValueError("kernel gain needs at least two particles")
    R = quat_to_rotation(q)
    g = pairwise_kernel(R, eps)
    off = g[~np.eye(n, dtype=bool)]
    if not np.any(off > 0):
        raise BandwidthError(f"all off-diagonal kernel values underflow at eps={eps}")
    _, T = markov_matrix(g)
    S = T[None] * trace_weights(R, trace_form)
    H = np.asarray(h_vals, dtype=float).reshape(n, -1) - h_hat
    return KernelOperator(eps=eps, T=T, S=S, H=H)


def fixed_point_solve(op, iterations, warm=None, tol=None, center=True):
    """Successive approximation ``Φ ← T Φ + ε H``, independently per channel.

    Runs ``iterations`` sweeps, or stops early once the sup-norm change drops
    below ``tol``. With ``center`` the mean is removed after each sweep; ``T``
    maps constants to themselves, so this only fixes the free constant mode.
    """
    if iterations < 1:
        raise ValueError("need at least one iteration")
    phi = np.zeros_like(op.H) if warm is None else np.array(warm, dtype=float).reshape(op.H.shape)
    forcing = op.eps * op.H
    for k in range(iterations):
        nxt = op.T @ phi + forcing
        if center:
            nxt -= nxt.mean(axis=0)
        if not np.all(np.isfinite(nxt)):
            raise FixedPointError(f"non-finite fixed-point iterate at sweep {k}")
        delta = np.max(np.abs(nxt - phi))
        phi = nxt
        if tol is not None and delta < tol:
            break
    return phi


def gain_from_phi(op, phi, dh=None, h_coef=-1.0):
    """Gain ``E_n · φ`` at the particles, shape ``(N, 3, m)``.

    ``dh`` holds ``E_n · h`` at the particles (shape ``(N, 3, m)``) and enters
    as ``h_coef * ε * dh``; leaving it out gives the gradient of the kernel
    average ``T Φ`` alone.
    """
    S1 = op.S.sum(axis=2)  # (3, N)
    Tphi = op.T @ phi  # (N, m)
    Sphi = np.einsum("nij,jm->inm", op.S, phi)
    gain = (Sphi - S1.T[:, :, None] * Tphi[:, None, :]) / (2 * op.eps)
    if dh is not None and h_coef != 0.0:
        gain = gain + h_coef * op.eps * np.asarray(dh, dtype=float)
    return gain


class KernelGain:
    """Kernel gain solver with a warm-started fixed point, one buffer per channel."""

    name = "kernel"

    def __init__(self, eps=1.0, iterations=10, trace_form="transpose", h_term="none", tol=None):
        if h_term not in H_TERMS:
            raise ValueError(f"h_term must be one of {sorted(H_TERMS)}, got {h_term!r}")
        if trace_form not in TRACE_FORMS:
            raise ValueError(f"trace form must be one of {TRACE_FORMS}, got {trace_form!r}")
        self.eps = eps
        self.iterations = iterations
        self.trace_form = trace_form
        self.h_term = h_term
        self.tol = tol
        self._phi = None

    def reset(self):
        self._phi = None

    def __call__(self, q, h_vals, h_hat, dh=None):
        op = build_operator(q, h_vals, h_hat, self.eps, self.trace_form)
        warm = self._phi if self._phi is not None and self._phi.shape == op.H.shape else None
        phi = fixed_point_solve(op, self.iterations, warm=warm, tol=self.tol)
        self._phi = phi
        return gain_from_phi(op, phi, dh, H_TERMS[self.h_term])
