import numpy as np
import pytest

from ura_sim.access_codes import build_steiner_code

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def s2425():
    return build_steiner_code(25, 4)


@pytest.fixture(scope="session")
def fano():
    return build_steiner_code(7, 3)


@pytest.fixture(scope="session")
def s239():
    return build_steiner_code(9, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
