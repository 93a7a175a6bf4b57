import pytest

from grushin.geometry import Dims
from grushin.oscillator import cached_table


@pytest.fixture(scope="session")
def table():
    return cached_table(400)


@pytest.fixture(scope="session")
def dims11():
    return Dims(1, 1)


@pytest.fixture
def verdict(request):
    """Record a one-line PASS/FAIL verdict shown in the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(label, ok, detail=""):
        line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
