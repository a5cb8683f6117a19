"""Ground-truth rigid-body simulation and the accelerometer/magnetometer model."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .so3 import (
    IDENTITY,
    covariance_sqrt,
    exp_axis_angle,
    normalize,
    quat_multiply,
    quat_to_rotation,
    sample_concentrated_gaussian,
)

GRAVITY_REF = np.array([0.0, 0.0, -1.0])
MAGNETIC_REF = np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0)

# Fixed truth for the large-error scenario: 180 degrees about (3, 1, 4).
FLIPPED_TRUTH = exp_axis_angle(np.pi * np.array([3.0, 1.0, 4.0]) / np.sqrt(26.0))

# Two readings of the reference noise levels: the degree labels, and covariance
# numerals that are ten times smaller in standard deviation.
NOISE_CONVENTIONS = ("degree-label", "table-numeral")


def angular_velocity(t):
    """Body angular velocity profile in rad/s."""
    return np.array(
        [
            np.sin(2 * np.pi * t / 15),
            -np.sin(2 * np.pi * t / 18 + np.pi / 20),
            np.cos(2 * np.pi * t / 17),
        ]
    )


def h_eval(q, r_g=GRAVITY_REF, r_b=MAGNETIC_REF):
    """Noise-free sensor output ``(R(q)ᵀ r_g, R(q)ᵀ r_b)``, shape ``(..., 6)``."""
    R = quat_to_rotation(q)
    refs = np.stack([r_g, r_b])
    # (R^T r)_k = sum_j R_jk r_j
    return np.einsum("...jk,sj->...sk", R, refs).reshape(R.shape[:-2] + (6,))


def propagate_truth(q, t, dt, process_cov, rng):
    """One geometric step of the kinematics with Brownian angular noise."""
    noise = covariance_sqrt(process_cov) @ rng.standard_normal(3) * np.sqrt(dt)
    return quat_multiply(q, exp_axis_angle(angular_velocity(t) * dt + noise))


def measure(q_true, dt, sensor_cov, rng, r_g=GRAVITY_REF, r_b=MAGNETIC_REF):
    """Measurement increment ``ΔZ = h(q) Δt + blockdiag(Σ_W, Σ_W)^{1/2} ΔW``."""
    root = covariance_sqrt(sensor_cov)
    noise = np.concatenate([root @ rng.standard_normal(3), root @ rng.standard_normal(3)])
    return h_eval(q_true, r_g, r_b) * dt + noise * np.sqrt(dt)


@dataclass(frozen=True)
class SensorModel:
    """Linear vector observations ``h(R) = Rᵀ r`` for a stack of references.

    ``noise_std`` is the per-sensor standard deviation of the measurement noise
    intensity. Filters work with the whitened model ``h / noise_std`` so that
    the innovation noise is standard.
    """

    refs: np.ndarray
    noise_std: np.ndarray

    @property
    def dim(self):
        return 3 * len(self.refs)

    @property
    def channel_std(self):
        return np.repeat(self.noise_std, 3)

    def h(self, q):
        R = quat_to_rotation(q)
        return np.einsum("...jk,sj->...sk", R, self.refs).reshape(R.shape[:-2] + (self.dim,))

    def lie_derivative(self, q):
        """``E_n · h`` at each ``q``, shape ``(..., 3, m)``.

        For ``h = Rᵀ r`` the derivative along ``R exp(t E_n)`` is ``-E_n Rᵀ r = (Rᵀ r) × e_n``.
        """
        y = self.h(q).reshape(np.shape(q)[:-1] + (len(self.refs), 3))
        eye = np.eye(3)
        # out[..., n, s, k] = cross(y_s, e_n)_k
        out = np.cross(y[..., None, :, :], eye[:, None, :])
        return out.reshape(np.shape(q)[:-1] + (3, self.dim))

    def whitened_h(self, q):
        return self.h(q) / self.channel_std

    def whitened_lie_derivative(self, q):
        return self.lie_derivative(q) / self.channel_std


@dataclass(frozen=True)
class ScenarioConfig:
    """Simulation scenario. Angles are radians; ``*_deg`` keys are accepted by :meth:`from_dict`."""

    name: str = "a"
    horizon: float = 2.0
    dt: float = 0.01
    process_std: float = np.deg2rad(5.0)
    sensor_std: float = np.deg2rad(10.0)
    init_std: float = np.deg2rad(30.0)
    r_g: tuple = tuple(GRAVITY_REF)
    r_b: tuple = tuple(MAGNETIC_REF)
    truth_init: object = "prior"
    nf_fpfg: int = 100
    nf_other: int = 30
    nf_steps: int = 3
    noise_convention: str = "degree-label"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon < self.dt:
            raise ValueError(f"horizon {self.horizon} is shorter than dt {self.dt}")
        for name in ("r_g", "r_b"):
            r = np.asarray(getattr(self, name), dtype=float)
            if r.shape != (3,) or abs(np.linalg.norm(r) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit 3-vector, got {r}")
        for name in ("process_std", "sensor_std", "init_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.sensor_std == 0:
            raise ValueError("sensor_std must be positive: measurements are whitened by it")
        if min(self.nf_fpfg, self.nf_other) < 1 or self.nf_steps < 0:
            raise ValueError("sub-interval counts must be >= 1")
        if self.noise_convention not in NOISE_CONVENTIONS:
            raise ValueError(f"noise_convention must be one of {NOISE_CONVENTIONS}")
        if not (isinstance(self.truth_init, str) and self.truth_init == "prior"):
            q = np.asarray(self.truth_init, dtype=float)
            if q.shape != (4,):
                raise ValueError("truth_init must be 'prior' or a quaternion")

    @classmethod
    def preset(cls, name, convention="degree-label"):
        """Scenario (a): 30 deg prior, 10 deg sensor noise, truth drawn from the prior.
        Scenario (b): 60 deg prior, 30 deg sensor noise, truth fixed at 180 deg about (3,1,4)."""
        scale = 1.0 if convention == "degree-label" else 0.1
        if name == "a":
            cfg = cls(name="a", sensor_std=np.deg2rad(10.0) * scale, init_std=np.deg2rad(30.0), nf_other=30)
        elif name == "b":
            cfg = cls(
                name="b",
                sensor_std=np.deg2rad(30.0) * scale,
                init_std=np.deg2rad(60.0),
                truth_init=tuple(FLIPPED_TRUTH),
                nf_other=20,
            )
        else:
            raise ValueError(f"unknown scenario {name!r}; expected 'a' or 'b'")
        return replace(cfg, process_std=np.deg2rad(5.0) * scale, noise_convention=convention)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        base = cls.preset(data.pop("scenario", "a"), data.pop("noise_convention", "degree-label"))
        updates = {}
        for key, value in data.items():
            if key.endswith("_deg"):
                key, value = key[: -len("_deg")], np.deg2rad(float(value))
            if key not in {f.name for f in fields(cls)}:
                raise ValueError(f"unknown scenario key {key!r}")
            if key in ("r_g", "r_b"):
                value = tuple(normalize(np.asarray(value, dtype=float)))
            elif key == "truth_init" and not isinstance(value, str):
                value = tuple(normalize(np.asarray(value, dtype=float)))
            updates[key] = value
        return replace(base, **updates)

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))

    @property
    def process_cov(self):
        return self.process_std**2 * np.eye(3)

    @property
    def sensor_cov(self):
        return self.sensor_std**2 * np.eye(3)

    @property
    def init_cov(self):
        return self.init_std**2 * np.eye(3)

    @property
    def sensors(self):
        return SensorModel(
            refs=np.array([self.r_g, self.r_b]),
            noise_std=np.array([self.sensor_std, self.sensor_std]),
        )

    def sub_intervals(self, step, kind):
        """Number of sequential measurement sub-updates at outer step ``step`` for a filter kind."""
        if step >= self.nf_steps:
            return 1
        return self.nf_fpfg if kind == "fpf-g" else self.nf_other


@dataclass
class Trajectory:
    times: np.ndarray
    truth: np.ndarray  # (n_steps + 1, 4)
    omega: np.ndarray  # (n_steps, 3), rate held over each step
    dz: np.ndarray  # (n_steps, 6), increment over [t_n, t_{n+1}]
    meta: dict = field(default_factory=dict)


def simulate(config, truth_rng, meas_rng):
    """Truth trajectory and measurement increments for one Monte Carlo run."""
    if isinstance(config.truth_init, str):
        q = sample_concentrated_gaussian(IDENTITY, config.init_cov, 1, truth_rng)[0]
    else:
        q = normalize(np.asarray(config.truth_init, dtype=float))
    n = config.n_steps
    times = np.arange(n + 1) * config.dt
    truth = np.empty((n + 1, 4))
    omega = np.empty((n, 3))
    dz = np.empty((n, 6))
    truth[0] = q
    r_g, r_b = np.asarray(config.r_g), np.asarray(config.r_b)
    for k in range(n):
        omega[k] = angular_velocity(times[k])
        q = propagate_truth(q, times[k], config.dt, config.process_cov, truth_rng)
        truth[k + 1] = q
        dz[k] = measure(q, config.dt, config.sensor_cov, meas_rng, r_g, r_b)
    return Trajectory(times=times, truth=truth, omega=omega, dz=dz)
