import math

import numpy as np
import pytest

from microcav.cavity import C_VACUUM, CouplingState, ResonatorMode

NU0 = C_VACUUM / 638.8e-9


def make_mode(linewidth_hz: float, ratio: float, beta: float = 1.0):
    """Mode and coupling with a given loaded linewidth [Hz] and κex/κ0."""
    kappa = 2 * math.pi * linewidth_hz
    kappa0 = kappa / (1 + ratio)
    return ResonatorMode(NU0, kappa0), CouplingState(ratio * kappa0, beta)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
