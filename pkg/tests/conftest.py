import sys
from pathlib import Path

import numpy as np
import pytest

# make tests/oracles.py importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))

from fbilora.core import make_config  # noqa: E402

TEST_MATRIX = [
    (7, "conventional"),
    (7, "s1", 2, 2),
    (7, "s1", 2, 4),
    (7, "s2", 2, 8, 2),
    (7, "s2", 3, 8, 2),
]


@pytest.fixture
def rng():
    return np.random.default_rng(20240515)


@pytest.fixture(params=TEST_MATRIX, ids=lambda a: "-".join(map(str, a)))
def cfg(request):
    return make_config(*request.param)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion(request):
    def report(number, ok, detail, part=""):
        label = f"{number}{' ' + part if part else ''}"
        ACCEPTANCE_LINES[(number, part)] = f"criterion {label:<11} {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[(number, part)])
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
