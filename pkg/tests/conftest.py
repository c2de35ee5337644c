import sys
from pathlib import Path

import numpy as np
import pytest

from osmoblend.io import read_image

DATA = Path(__file__).parent / "data"
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def camera64():
    return read_image(DATA / "camera64.pgm")


@pytest.fixture(scope="session")
def camera128():
    return read_image(DATA / "camera128.pgm")


@pytest.fixture(scope="session")
def astronaut48():
    return read_image(DATA / "astronaut48.ppm")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
