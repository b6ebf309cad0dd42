import pytest

from mflab.mf import FactoredEquation, s_ideal, trivial
from mflab.poly import RingCtx


@pytest.fixture(scope="session")
def xy():
    return RingCtx(("x", "y"))


def equation(text: str) -> FactoredEquation:
    return FactoredEquation.from_text(text, RingCtx(("x", "y")))


@pytest.fixture(scope="session")
def node():
    return equation("x*y")


@pytest.fixture(scope="session")
def three_lines():
    return equation("x*y*(x+y)")


@pytest.fixture(scope="session")
def cusp_line():
    return equation("x*(x^2+y^3)")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines.extend(v for k, v in getattr(rep, "user_properties", []) if k == "acceptance")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
