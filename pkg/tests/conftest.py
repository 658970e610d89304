from __future__ import annotations

import math

import numpy as np
import pytest

from tunable_magnet.circuit import CircuitParams
from tunable_magnet.config import bundled_config, load_config
from tunable_magnet.hysteresis import MajorLoop, synthetic_alnico5

MU0 = 4e-7 * math.pi  # independent of the package constant on purpose


@pytest.fixture(scope="session")
def alnico() -> MajorLoop:
    return synthetic_alnico5()


@pytest.fixture(scope="session")
def toy_loop() -> MajorLoop:
    """Straight branch B = 1.2 + 2.4e-5*H on [-50 kA/m, 0], extended flat outside so it spans both signs."""
    H = np.array([60e3, 0.0, -50e3, -60e3])
    B = np.array([1.2, 1.2, 0.0, -0.01])
    return MajorLoop(H, B)


@pytest.fixture(scope="session")
def unit_params() -> CircuitParams:
    """k1 = k2 = 1, A_m = A_g, L_m = 1 cm, l_g = 1 mm: the hand-calculation geometry."""
    return CircuitParams(A_m=1e-4, A_g=1e-4, L_m=1e-2, l_g=1e-3, N=100, R=1.0, k1=1.0, k2=1.0)


@pytest.fixture(scope="session")
def nominal():
    return load_config(bundled_config("nominal"))


@pytest.fixture(scope="session")
def mismatch():
    return load_config(bundled_config("mismatch"))


ACCEPTANCE: dict[int, tuple[bool, str]] = {}
"""Criterion number -> (passed, detail), filled by test_acceptance and echoed in the terminal summary."""


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
