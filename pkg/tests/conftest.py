from pathlib import Path

import pytest

from mevc.contracts import AMM, Airdrop, CoinPusher, Push, Swap
from mevc.core import honest

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    n = marker.args[0]
    ok = call.excinfo is None
    prev = _criteria.get(n, (True, []))
    names = prev[1] + [item.name]
    _criteria[n] = (prev[0] and ok, names)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, names = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  ({', '.join(names)})")


@pytest.fixture
def scenarios_dir():
    return SCENARIOS


@pytest.fixture
def amm_sys():
    return AMM({"T0": 4.0, "T1": 9.0})


@pytest.fixture
def arb_state(amm_sys):
    return amm_sys.state((6.0, 6.0))


@pytest.fixture
def sandwich_state(amm_sys):
    return amm_sys.state((6.0, 6.0), {"T0": 3.0}, [("a", Swap(honest("A"), 3.0, "T0", 1.0))])


@pytest.fixture
def mevsup_state(amm_sys):
    return amm_sys.state((6.0, 6.0), {"T0": 3.0}, [("a", Swap(honest("A"), 3.0, "T0", 0.0))])


@pytest.fixture
def cp_sys():
    return CoinPusher()


@pytest.fixture
def cp_state(cp_sys):
    return cp_sys.state(100.0, 0.0, 1.0, [("p", Push(honest("A"), 1.0))])


@pytest.fixture
def airdrop_sys():
    return Airdrop()
