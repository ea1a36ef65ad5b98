import pytest

from ustsle.graph import build_square_domain, p3_probe
from ustsle.linkpat import default_table


@pytest.fixture(scope="session")
def probe():
    return p3_probe()


@pytest.fixture(scope="session")
def grid2():
    return build_square_domain(2, 2, 1.0)


@pytest.fixture(scope="session")
def grid3():
    return build_square_domain(3, 3, 1.0)


@pytest.fixture(scope="session")
def tables():
    return {n: default_table(n) for n in (1, 2, 3)}


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance as acc

    if acc.LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(acc.BUDGET_SECONDS):
            terminalreporter.write_line(acc.LINES.get(k, f"criterion {k:2d} FAIL (not run or raised)"))
