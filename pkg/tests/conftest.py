import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import SINGLET, spin_kets  # noqa: E402

from logos_qlab import IntensiveState, bundled_instance, make_projector  # noqa: E402


@pytest.fixture
def singlet():
    return IntensiveState(SINGLET)


@pytest.fixture
def spin_pool():
    return [make_projector(v, label=k) for k, v in spin_kets().items()]


@pytest.fixture(scope="session")
def ks18():
    return bundled_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
