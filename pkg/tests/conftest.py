import numpy as np
import pytest

from fleetdeg.fleet import FleetConfig
from fleetdeg.signal import MarkovSignalModel, RegulationAlphabet

TOY = RegulationAlphabet((-4, -1, 1, 5))


@pytest.fixture
def toy_alphabet():
    return TOY


@pytest.fixture
def toy_fleet():
    return FleetConfig.from_lists([2, 3], [2, 3], [2, 3])


@pytest.fixture
def uniform_signal():
    return MarkovSignalModel.uniform(TOY, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
