import numpy as np
import pytest

from stochwave.hamiltonian import TruncationConfig, build_Z, calibrate_C_gg
from stochwave.localization import LocalizationSchedule
from stochwave.noise import Mollifier, build_lift, sample_white_noise, zero_noise
from stochwave.spectral import TorusGrid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid2():
    return TorusGrid(2, 8.0, 32)


@pytest.fixture(scope="session")
def noisy_op(grid2):
    lift = build_lift(sample_white_noise(7, grid2), Mollifier(0.25))
    return build_Z(lift, LocalizationSchedule(grid2, L=1.0))


@pytest.fixture(scope="session")
def noisy_config(noisy_op):
    return TruncationConfig(noisy_op.grid, 2.0, C_gg=calibrate_C_gg(noisy_op))


@pytest.fixture(scope="session")
def free_op(grid2):
    lift = build_lift(zero_noise(grid2), Mollifier(0.25))
    return build_Z(lift, LocalizationSchedule(grid2, L=1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
