import pytest

from gqforms.field import make_cyclic_cubic, make_real_quadratic
from gqforms.forms import make_diagonal

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def qsqrt2():
    return make_real_quadratic(2)


@pytest.fixture(scope="session")
def cubic():
    return make_cyclic_cubic()


@pytest.fixture(scope="session")
def small_form(qsqrt2):
    """X1^2 + X2^2 + (X1^tau)^2."""
    return make_diagonal(qsqrt2, [1, 1], [1])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
