import numpy as np
import pytest

from botma.kinematics import observer_track, synthesize_bearings
from botma.objective import BearingObjective, BearingObjectiveXY
from botma.scenarios import load_preset


@pytest.fixture(scope="session")
def trial07():
    return load_preset("trial07")


@pytest.fixture(scope="session")
def trial07_obs(trial07):
    clean, noisy = synthesize_bearings(trial07)
    return noisy, observer_track(trial07)


@pytest.fixture
def objective07(trial07_obs):
    return BearingObjective(*trial07_obs)


@pytest.fixture
def objective07_xy(trial07_obs):
    return BearingObjectiveXY(*trial07_obs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").rstrip("ab"))):
            terminalreporter.write_line(line)
