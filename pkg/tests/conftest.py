"""Shared fixtures: schedules and small analytic models used across the suite."""

import numpy as np
import pytest

from diffgeo import (
    GaussianMixture,
    GmmDenoiser,
    NoiseSchedule,
    three_mode_1d,
)


# Pass/fail lines registered by the acceptance tests; echoed after the run
# so they survive output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criterion_report():
    def report(num: int, name: str, ok: bool, detail: str) -> str:
        line = f"[criterion {num:02d}] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return line

    return report


@pytest.fixture(scope="session")
def vp():
    return NoiseSchedule.vp_logsnr_linear()


@pytest.fixture(scope="session")
def ve():
    return NoiseSchedule.ve()


@pytest.fixture(scope="session")
def gauss1d(vp):
    """Single 1-D Gaussian data distribution; everything is closed form."""
    mix = GaussianMixture(weights=[1.0], means=[[0.4]], variance=0.8)
    return GmmDenoiser(mix, vp)


@pytest.fixture(scope="session")
def gmm1d(vp):
    """Three-mode 1-D mixture used throughout the docs and presets."""
    return GmmDenoiser(three_mode_1d(), vp)


@pytest.fixture(scope="session")
def gmm2d(vp):
    mix = GaussianMixture(
        weights=[0.5, 0.5],
        means=[[-1.5, 0.0], [1.5, 0.0]],
        variance=0.16,
    )
    return GmmDenoiser(mix, vp)
