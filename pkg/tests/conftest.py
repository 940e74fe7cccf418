from __future__ import annotations

import numpy as np
import pytest

from papertex import synth

SMALL = (1200, 1650)


@pytest.fixture(scope="session")
def sheets():
    return {seed: synth.generate_sheet(seed) for seed in (1, 2, 3)}


@pytest.fixture(scope="session")
def small_captures(sheets):
    """Two perturbed captures of each of three sheets at reduced resolution."""
    out = {}
    for seed, sheet in sheets.items():
        for t, rot in enumerate((-6.0, 9.0)):
            p = synth.CaptureParams(
                rotation=rot,
                translation=(10.0 * t, -7.0),
                noise_sigma=0.02,
                illumination_gain=1.0 + 0.05 * t,
                resolution=SMALL,
                seed=100 * seed + t,
            )
            out[(seed, t)] = synth.render_capture(sheet, p)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
