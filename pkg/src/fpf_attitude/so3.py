"""Quaternion and SO(3) primitives.

Quaternions are numpy arrays with the scalar part first, ``(q0, q1, q2, q3)``.
All functions broadcast over leading axes, so an ensemble of particles is just
an ``(N, 4)`` array.

The Lie-algebra basis ``E_n`` is fixed so that ``skew(v) @ u == cross(v, u)``,
and the action of ``E_n`` on a function is the derivative along the right
translation ``q -> q ⊗ exp(t e_n)``.
"""
from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# BASIS[n] @ u == cross(e_n, u)
BASIS = np.array(
    [
        [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
        [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    ]
)

_SMALL_ANGLE = 1e-8
_DRIFT_TOL = 1e-9


class AmbiguousMeanError(ValueError):
    """The largest eigenvalue of the quaternion scatter matrix is repeated."""


def normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def _renormalize_if_drifted(q):
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(np.abs(norm - 1.0) > _DRIFT_TOL):
        return q / norm
    return q


def quat_inverse(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_multiply(p, q):
    """Quaternion product ``p ⊗ q``."""
    p = _renormalize_if_drifted(np.asarray(p, dtype=float))
    q = _renormalize_if_drifted(np.asarray(q, dtype=float))
    p0, pv = p[..., :1], p[..., 1:]
    q0, qv = q[..., :1], q[..., 1:]
    scalar = p0 * q0 - np.sum(pv * qv, axis=-1, keepdims=True)
    vector = p0 * qv + q0 * pv + np.cross(pv, qv)
    return _renormalize_if_drifted(np.concatenate([scalar, vector], axis=-1))


def quat_to_rotation(q):
    q = np.asarray(q, dtype=float)
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = 2 * q0**2 + 2 * q1**2 - 1
    R[..., 0, 1] = 2 * (q1 * q2 - q0 * q3)
    R[..., 0, 2] = 2 * (q1 * q3 + q0 * q2)
    R[..., 1, 0] = 2 * (q1 * q2 + q0 * q3)
    R[..., 1, 1] = 2 * q0**2 + 2 * q2**2 - 1
    R[..., 1, 2] = 2 * (q2 * q3 - q0 * q1)
    R[..., 2, 0] = 2 * (q1 * q3 - q0 * q2)
    R[..., 2, 1] = 2 * (q2 * q3 + q0 * q1)
    R[..., 2, 2] = 2 * q0**2 + 2 * q3**2 - 1
    return R


def rotation_to_quat(R):
    """Inverse of :func:`quat_to_rotation`, returning the representative with q0 >= 0."""
    R = np.asarray(R, dtype=float)
    # Shepperd's method, branch on the largest of (trace, diagonal)
    tr = np.trace(R)
    diag = np.array([tr, R[0, 0], R[1, 1], R[2, 2]])
    k = int(np.argmax(diag))
    if k == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = [s / 4, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + 2 * R[0, 0] - tr)
        q = [(R[2, 1] - R[1, 2]) / s, s / 4, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif k == 2:
        s = 2.0 * np.sqrt(1.0 + 2 * R[1, 1] - tr)
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, s / 4, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + 2 * R[2, 2] - tr)
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, s / 4]
    return canonical(normalize(np.array(q)))


def canonical(q):
    """Pick the sign of ``q`` with q0 >= 0 (ties broken on the first nonzero component)."""
    q = np.asarray(q, dtype=float)
    first = np.argmax(q != 0, axis=-1)[..., None]
    sign = np.sign(np.take_along_axis(q, first, axis=-1))
    return q * np.where(sign == 0, 1.0, sign)


def skew(v):
    v = np.asarray(v, dtype=float)
    return np.einsum("...n,njk->...jk", v, BASIS)


def unskew(S):
    S = np.asarray(S, dtype=float)
    return np.stack([S[..., 2, 1], S[..., 0, 2], S[..., 1, 0]], axis=-1)


def exp_axis_angle(v):
    """Unit quaternion for a rotation by ``|v|`` radians about ``v / |v|``."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    trig = np.concatenate([np.cos(safe / 2), np.sin(safe / 2) * v / safe], axis=-1)
    series = np.concatenate([np.ones_like(theta), v / 2], axis=-1)
    series = series / np.linalg.norm(series, axis=-1, keepdims=True)
    return np.where(small, series, trig)


def log_quat(q):
    """Rotation vector of ``q``; the inverse of :func:`exp_axis_angle` on angles in [0, pi]."""
    q = canonical(np.asarray(q, dtype=float))
    qv = q[..., 1:]
    s = np.linalg.norm(qv, axis=-1, keepdims=True)
    theta = 2 * np.arctan2(s, q[..., :1])
    scale = np.where(s < _SMALL_ANGLE, 2.0 / np.maximum(q[..., :1], _SMALL_ANGLE), theta / np.where(s == 0, 1.0, s))
    return qv * scale


def rotation_exp(v):
    return quat_to_rotation(exp_axis_angle(v))


def quat_average(qs):
    """Attitude mean of an ensemble: the principal eigenvector of ``(1/N) Σ q qᵀ``."""
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    if qs.shape[0] < 1:
        raise ValueError("cannot average an empty ensemble")
    Q = qs.T @ qs / qs.shape[0]
    eigvals, eigvecs = np.linalg.eigh(Q)
    if eigvals[-1] - eigvals[-2] <= 1e-12:
        raise AmbiguousMeanError(
            f"largest eigenvalue of the scatter matrix is repeated ({eigvals[-1]:.3e}, {eigvals[-2]:.3e})"
        )
    return canonical(normalize(eigvecs[:, -1]))


def covariance_sqrt(cov):
    """Symmetric square root of a PSD matrix; raises ``ValueError`` otherwise."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be a square matrix, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise ValueError("covariance is not symmetric")
    w, V = np.linalg.eigh(cov)
    if w.min() < -1e-12 * max(1.0, abs(w.max())):
        raise ValueError(f"covariance is not positive semidefinite (min eigenvalue {w.min():.3e})")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def sample_concentrated_gaussian(mean, cov, n, rng):
    """Draw ``n`` samples ``mean ⊗ exp(v)`` with ``v ~ N(0, cov)`` in the Lie algebra."""
    root = covariance_sqrt(cov)
    v = rng.standard_normal((n, 3)) @ root.T
    return quat_multiply(np.broadcast_to(normalize(mean), (n, 4)), exp_axis_angle(v))


def rotation_angle_error(q, q_hat):
    """Geodesic angle between two attitudes, in [0, pi]; invariant to the sign of either input."""
    dq = quat_multiply(quat_inverse(q_hat), q)
    return 2 * np.arccos(np.clip(np.abs(dq[..., 0]), 0.0, 1.0))
