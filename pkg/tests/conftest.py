import pytest

from bernoulli_overlaps import QUARTIC, system_from_coeffs
from bernoulli_overlaps.cutproject import (
    build_certificate,
    fractal_approx,
    generate_xbar,
)
from bernoulli_overlaps.det import successor_chain
from bernoulli_overlaps.limit import build_garsia_graph, lambda_estimate, weight_table

CUBIC = (1, -1, -2, 1)
# d = 2 with a complex expanding pair; beta - 1 is not a unit
QUINTIC = (1, -1, -1, 2, -2, -2)


@pytest.fixture(scope="session")
def quartic():
    return system_from_coeffs(QUARTIC)


@pytest.fixture(scope="session")
def cubic():
    return system_from_coeffs(CUBIC)


@pytest.fixture(scope="session")
def quintic():
    return system_from_coeffs(QUINTIC)


@pytest.fixture(scope="session")
def graph(quartic):
    return build_garsia_graph(quartic)


@pytest.fixture(scope="session")
def lam(graph):
    return lambda_estimate(graph)


@pytest.fixture(scope="session")
def window20(quartic):
    return generate_xbar(quartic, 20)


@pytest.fixture(scope="session")
def table20(window20, lam, graph):
    return weight_table(window20, lam.value, 30, graph)


@pytest.fixture(scope="session")
def table200(quartic, lam, graph):
    return weight_table(generate_xbar(quartic, 200), lam.value, 30, graph)


@pytest.fixture(scope="session")
def chain200(table200):
    return successor_chain(table200.window)


@pytest.fixture(scope="session")
def fractal12(quartic):
    return fractal_approx(quartic, 12)


@pytest.fixture(scope="session")
def cert12(quartic, fractal12):
    return build_certificate(quartic, fractal12)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
