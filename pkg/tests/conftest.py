import numpy as np
import pytest

from dicke_detuning import DickeState


def random_dicke(rng) -> DickeState:
    p = rng.dirichlet(np.ones(4))
    r = np.sqrt(p[1] * p[2]) * rng.uniform(0.0, 1.0)
    return DickeState(*p, c_sa=r * np.exp(1j * rng.uniform(0.0, 2 * np.pi)))


def random_density(rng, dim=4, rank=None) -> np.ndarray:
    rank = rank or dim
    x = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
