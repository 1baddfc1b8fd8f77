from pathlib import Path

import pytest

from flatmc.core_system import parse_system
from flatmc.spec_automata import parse_ba

EXAMPLES = Path(__file__).resolve().parents[1] / "examples"


@pytest.fixture(scope="session")
def fig1():
    return parse_system((EXAMPLES / "fig1.sys").read_text()), parse_ba((EXAMPLES / "fig1.ba").read_text())


@pytest.fixture(scope="session")
def examples_dir():
    return EXAMPLES


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
