import numpy as np
import pytest

from lanefusion.dataio import SceneConfig, generate_synthetic_frame
from lanefusion.geometry import Calibration

# acceptance criteria record (name, passed, detail) here; printed after the run
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


def simple_calib(f=100.0, cx=64.0, cy=64.0, R=None, T=None):
    K = np.array([[f, 0, cx], [0, f, cy], [0, 0, 1.0]])
    return Calibration(K, np.eye(3) if R is None else R, np.zeros(3) if T is None else T)


@pytest.fixture(scope="session")
def frame():
    return generate_synthetic_frame(7)


@pytest.fixture(scope="session")
def small_scene():
    return SceneConfig(height=32, width=64, focal=40.0, horizon=10.0)
