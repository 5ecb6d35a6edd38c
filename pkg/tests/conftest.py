import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nhpt.operators import eigendecompose, matrix_elements
from nhpt.scenarios import build_ep2, build_ep3

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def _system(builder):
    h0, h1 = builder()
    basis = eigendecompose(h0)
    return h0, h1, basis, matrix_elements(h1, basis)


@pytest.fixture(scope="session")
def ep2():
    return _system(build_ep2)


@pytest.fixture(scope="session")
def ep3():
    return _system(build_ep3)


def random_hermitian(rng, n, scale=1.0):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (x + x.conj().T)


def random_general(rng, n):
    return rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
