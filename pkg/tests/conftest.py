import numpy as np
import pytest
from hypothesis import strategies as st

from fpf_attitude.sim import GRAVITY_REF, MAGNETIC_REF, SensorModel


def quaternions():
    """Unit quaternions from a box in R^4, rejecting near-zero draws."""
    return (
        st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4)
        .map(np.array)
        .filter(lambda v: np.linalg.norm(v) > 0.1)
        .map(lambda v: v / np.linalg.norm(v))
    )


def rotation_vectors(max_norm=3.0):
    return st.lists(st.floats(-max_norm / 2, max_norm / 2, allow_nan=False), min_size=3, max_size=3).map(np.array)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_sensors():
    return SensorModel(refs=np.array([GRAVITY_REF, MAGNETIC_REF]), noise_std=np.ones(2))


def random_quats(rng, n):
    q = rng.standard_normal((n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


ACCEPTANCE_LINES = []


def report(label, passed, detail):
    """Record and print one acceptance line; returns ``passed``."""
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
