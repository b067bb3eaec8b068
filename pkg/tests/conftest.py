import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from frislab.geometry import SurfaceConfig  # noqa: E402

LAMBDA = 0.125
PITCH = LAMBDA / 3
CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def surface(n_h, n_v, m, pitch=PITCH, **kw):
    return SurfaceConfig(LAMBDA, pitch, pitch, n_h, n_v, m, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def desk_surface():
    return surface(12, 12, 16)


def complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
