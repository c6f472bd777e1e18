import math

import numpy as np
import pytest

from wavekit.continuation import Discretization
from wavekit.presets import load_preset
from wavekit.trivial import TrivialParameters, make_trivial_flow


@pytest.fixture(scope="session")
def ek1():
    return load_preset("ek1")


@pytest.fixture(scope="session")
def ek2():
    return load_preset("ek2")


@pytest.fixture(scope="session")
def ek3():
    return load_preset("ek3")


@pytest.fixture(scope="session")
def special_flow():
    return make_trivial_flow(TrivialParameters(1.0, -1.0, 0.5 * math.pi, 1.0))


@pytest.fixture(scope="session")
def disc1():
    return Discretization(16, 48, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance criteria report --------------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion implemented by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    status = "PASS" if rep.passed and not hasattr(rep, "wasxfail") else "FAIL"
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2} {status}: {title}; {detail}")
