import sys

import pytest

from oscillax.mollifier import diagonal_envelope_mollifier, fast_path_log_mollifier
from oscillax.symbol import build_counterexample_symbol, make_cutoff


@pytest.fixture(scope="session")
def cutoff():
    return make_cutoff()


@pytest.fixture(scope="session")
def envelope_b():
    return diagonal_envelope_mollifier()


@pytest.fixture(scope="session")
def fast_b():
    return fast_path_log_mollifier()


@pytest.fixture(scope="session")
def sym1(cutoff, fast_b):
    return build_counterexample_symbol(fast_b, 1, cutoff=cutoff)


@pytest.fixture(scope="session")
def sym2(cutoff, fast_b):
    return build_counterexample_symbol(fast_b, 2, cutoff=cutoff)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k][1])
