"""Pseudospectral simulator for the cubic wave equation with multiplicative white noise."""

__version__ = "0.1.0"

from .spectral import TorusGrid  # noqa: E402
from .noise import Mollifier, build_lift, sample_white_noise, zero_noise  # noqa: E402
from .localization import LocalizationSchedule  # noqa: E402
from .hamiltonian import TruncationConfig, build_Z, calibrate_C_gg  # noqa: E402
from .dynamics import EvolveConfig, WaveState, evolve  # noqa: E402

__all__ = [
    "TorusGrid", "Mollifier", "build_lift", "sample_white_noise", "zero_noise",
    "LocalizationSchedule", "TruncationConfig", "build_Z", "calibrate_C_gg",
    "EvolveConfig", "WaveState", "evolve",
]
