import pytest

from gsperm import DesignSpec, SpendingFunction, TrialData


@pytest.fixture
def fixture_3v3():
    """Single stage, X = (1, 2, 3), Y = (0, 1, 2)."""
    return TrialData.from_arrays([[1.0, 2.0, 3.0]], [[0.0, 1.0, 2.0]])


@pytest.fixture
def fixture_3v3_two_stage():
    """Two stages of 3 vs 3 with distinct second-stage values (400 joint assignments)."""
    return TrialData.from_arrays(
        [[1.0, 2.0, 3.0], [2.5, 4.0, 1.5]],
        [[0.0, 1.0, 2.0], [0.5, -1.0, 3.2]],
    )


@pytest.fixture
def pocock():
    return SpendingFunction("pocock", 0.025)


@pytest.fixture
def obf():
    return SpendingFunction("obrien-fleming", 0.025)


@pytest.fixture
def design_k2_n3():
    return DesignSpec.balanced(2, 3, alpha=0.025, spending="pocock")


def pytest_terminal_summary(terminalreporter):
    from _report import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
