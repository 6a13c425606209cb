import numpy as np
import pytest

from moutard_lab import Grid, MatrixField, make_grid


@pytest.fixture
def unit_grid():
    return make_grid(-1, 1, -1, 1, 33, 33)


def scalar(grid: Grid, values) -> MatrixField:
    """N=1 field from an array of node values."""
    return MatrixField(grid, np.asarray(values, dtype=complex)[..., None, None])


def random_field(grid: Grid, n: int, seed: int) -> MatrixField:
    rng = np.random.default_rng(seed)
    shape = grid.shape + (n, n)
    return MatrixField(grid, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
