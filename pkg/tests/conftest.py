import time

import numpy as np
import pytest

from lfdeblur.core import LightField

ACCEPTANCE = {}


def random_lf(rng, dims=(8, 9, 4, 5), nc=1):
    return LightField(rng.random(tuple(dims) + (nc,)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def record():
    """Store a one-line verdict for an acceptance criterion."""

    def _record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


# ------------------------------------------------------------ shared solver runs

BLIND_DIMS = (48, 48, 6, 6)
BLIND_PATH = np.array([[0, 0, 0], [0.2, 0.1, 0.003], [1.4, 0.9, 0.03]])


@pytest.fixture(scope="session")
def blind_instance():
    from lfdeblur.forward import ExposureConfig, MotionPath, blur
    from lfdeblur.synth import demo_scene

    sharp = demo_scene("two-plane", BLIND_DIMS, depths=[0.7, 1.4], seed=0)
    truth = MotionPath(BLIND_PATH)
    return sharp, truth, blur(sharp, truth, ExposureConfig(16))


@pytest.fixture(scope="session")
def blind_run(blind_instance):
    from lfdeblur.solver import SolverConfig, blind_deblur

    _, _, observed = blind_instance
    t0 = time.perf_counter()
    rep = blind_deblur(observed, SolverConfig(seed=0))
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="session")
def null_run(blind_instance):
    from lfdeblur.solver import SolverConfig, blind_deblur

    sharp, _, _ = blind_instance
    return blind_deblur(sharp, SolverConfig(seed=0))
