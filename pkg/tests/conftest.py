import pytest
from hypothesis import settings

from udn_ase.analytic_engine import AnalysisConfig
from udn_ase.channel_models import build_3gpp_case1

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")


@pytest.fixture(scope="session")
def case1():
    return build_3gpp_case1(L=0.0085)


@pytest.fixture(scope="session")
def case1_cfg(case1):
    return AnalysisConfig(case1)


# -- one PASS/FAIL line per acceptance criterion in the terminal summary ---------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    failed = rep.failed
    if rep.when == "call" or failed:
        prev = _CRITERIA.get(n, (True, item.name))
        _CRITERIA[n] = (prev[0] and not failed, item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, name = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({name})")
