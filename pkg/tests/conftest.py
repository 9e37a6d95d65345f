import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from locones import LomseParams, launch_unstable_orbit  # noqa: E402

TYPE_I = [(3, 2, 2), (5, 4, 2), (5, 4, 4), (7, 4, 2), (7, 4, 4), (15, 8, 2)]
TYPE_II = [(3, 2, 4), (3, 2, 6), (3, 2, 8), (5, 4, 6), (5, 4, 8)]


@functools.lru_cache(maxsize=None)
def cached_orbit(n, p, k, converge_tol=1e-8, tol=1e-10, eps=1e-6):
    return launch_unstable_orbit(LomseParams.from_npk(n, p, k), eps=eps, tol=tol,
                                 converge_tol=converge_tol)


@pytest.fixture
def params_322():
    return LomseParams.from_npk(3, 2, 2)


@pytest.fixture
def params_324():
    return LomseParams.from_npk(3, 2, 4)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
