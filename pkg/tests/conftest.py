from importlib import resources

import pytest

from psrclock.calibration import default_calibration
from psrclock.elements import load_ff_table
from psrclock.netlist import elaborate, parse_tree_spec


def packaged_netlist(name: str) -> str:
    return resources.files("psrclock.data.netlists").joinpath(name).read_text("utf-8")


@pytest.fixture(scope="session")
def calibration():
    return default_calibration()


@pytest.fixture(scope="session")
def ff_models():
    return load_ff_table()


@pytest.fixture(scope="session")
def spread8_spec():
    return parse_tree_spec(packaged_netlist("spread8.psr"), "spread8.psr")


@pytest.fixture(scope="session")
def spread8_net(spread8_spec, calibration):
    return elaborate(spread8_spec, calibration.unit_caps)


@pytest.fixture(scope="session")
def symmetric8_net(calibration):
    return elaborate(parse_tree_spec(packaged_netlist("symmetric8.psr")), calibration.unit_caps)


# -- acceptance summary: one pass/fail line per criterion ---------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when == "teardown":
        return
    if rep.when == "setup" and rep.passed:
        return
    num, title = mark.args
    measured = "; ".join(f"{k} {v}" for k, v in rep.user_properties)
    _CRITERIA[num] = (title, rep.passed, measured)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok, measured = _CRITERIA[num]
        line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {title}"
        if measured:
            line += f"  [{measured}]"
        terminalreporter.write_line(line)
