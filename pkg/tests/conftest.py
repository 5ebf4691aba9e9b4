import numpy as np
import pytest
from hypothesis import settings, strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

coord = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


def points(n=1):
    return arrays(np.float64, (2 * n + 1,), elements=coord)


def dims():
    return st.integers(1, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(rng, count, n=1, scale=1.0):
    return rng.normal(size=(count, 2 * n + 1)) * scale


def ball_points(rng, count, rmin=0.1, rmax=0.9):
    """Random H_1 points with gauge in ``[rmin, rmax]``."""
    rho = rng.uniform(rmin, rmax, count)
    psi = rng.uniform(-1.4, 1.4, count)
    phi = rng.uniform(0, 2 * np.pi, count)
    r = rho * np.sqrt(np.cos(psi))
    return np.stack([r * np.cos(phi), r * np.sin(phi), rho ** 2 * np.sin(psi)], -1)


def sphere_points(rng, count, psi_max=1.4):
    return ball_points_on(rng.uniform(-psi_max, psi_max, count), rng.uniform(0, 2 * np.pi, count))


def ball_points_on(psi, phi, rho=1.0):
    r = rho * np.sqrt(np.cos(psi))
    return np.stack([r * np.cos(phi), r * np.sin(phi), rho ** 2 * np.sin(psi) + 0 * phi], -1)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
