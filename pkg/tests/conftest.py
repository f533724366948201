import pytest

from epskit.displacer import DisplacerSpec
from epskit.materials import get_material
from epskit.phasematch import CrystalSpec, PumpSpec, solve_signal_idler
from epskit.wedges import WedgeSpec

PUMP_NM = 523.6
SIGNAL_NM = 790.8
IDLER_NM = 1550.0


@pytest.fixture(scope="session")
def bbo():
    return get_material("alpha-BBO")


@pytest.fixture(scope="session")
def calcite():
    return get_material("calcite")


@pytest.fixture(scope="session")
def ppln():
    return get_material("MgO:LiNbO3")


@pytest.fixture(scope="session")
def pump():
    return PumpSpec(PUMP_NM, 0.1, 1e-3)


@pytest.fixture(scope="session")
def crystal(ppln):
    return CrystalSpec(ppln, 10.0, 7.1, 100.0)


@pytest.fixture(scope="session")
def solution(pump, crystal):
    return solve_signal_idler(pump, crystal)


@pytest.fixture(scope="session")
def displacer(bbo):
    return DisplacerSpec(bbo, 39.4, 45.0)


@pytest.fixture(scope="session")
def wedge(calcite):
    return WedgeSpec(calcite, 15.0)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; returns a callable (number, ok, detail) -> ok."""

    def record(number, ok, detail):
        _ACCEPTANCE_LINES.append((number, f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"))
        print(_ACCEPTANCE_LINES[-1][1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES, key=lambda t: t[0]):
            terminalreporter.write_line(line)
