import numpy as np
import pytest

from eulag.spectral import make_grid
from eulag.thermo import gamma_law


@pytest.fixture(scope="session")
def law():
    return gamma_law(1.0, 1.4)


@pytest.fixture(scope="session")
def g1():
    return make_grid(1, 64)


@pytest.fixture(scope="session")
def g2():
    return make_grid(2, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_trig(grid, rng, kmax=None, batch=()):
    """Random real trigonometric polynomial with modes below ``kmax``."""
    kmax = grid.n // 3 if kmax is None else kmax
    fh = np.zeros(batch + grid.k2.shape, dtype=complex)
    fh += rng.standard_normal(fh.shape) + 1j * rng.standard_normal(fh.shape)
    keep = np.ones(grid.k2.shape, dtype=bool)
    for k in grid._k:
        keep &= np.abs(k) < kmax
    return grid.ifft(fh * keep)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
