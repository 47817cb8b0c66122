"""Shared fixtures: small grids for unit tests, the desk-scale grid for acceptance."""
from __future__ import annotations

import numpy as np
import pytest

from twistgw.geometry import ThetaMatrix, build_vielbein, identity_vielbein
from twistgw.grid import BoxGrid, ScalarField
from twistgw.model import Configuration, GWParams
from twistgw.star import StarConfig

THETA = 0.7


def gaussian(grid: BoxGrid, center=(0.3, -0.2), width=1.5, amp=0.5) -> ScalarField:
    xs = [grid.coordinate(mu) for mu in range(grid.dim)]
    r2 = sum((xs[mu] - center[mu]) ** 2 for mu in range(grid.dim))
    return ScalarField(grid, amp * np.exp(-r2 / (2.0 * width ** 2)))


def sinusoidal_twist(grid: BoxGrid, amp: float = 0.1, damping: float = 2.0) -> list[ScalarField]:
    x, y = grid.coordinate(0), grid.coordinate(1)
    env = np.exp(-(x ** 2 + y ** 2) / damping ** 2)
    return [ScalarField(grid, x + amp * np.sin(y) * env), grid.x(1)]


def make_config(grid: BoxGrid, params: GWParams, twisted: bool = True, N: int = 4, phi: ScalarField | None = None,
                xt_mode: str = "symmetrized", **star_kw) -> Configuration:
    v = build_vielbein(sinusoidal_twist(grid)) if twisted else identity_vielbein(grid)
    sc = StarConfig(ThetaMatrix.block([THETA]), v, N=N, **star_kw)
    return Configuration(gaussian(grid) if phi is None else phi, v, params, sc, xt_mode)


@pytest.fixture(scope="session")
def small_grid() -> BoxGrid:
    return BoxGrid(2, 6.0, 48)


@pytest.fixture(scope="session")
def grid64() -> BoxGrid:
    return BoxGrid(2, 6.0, 64)


@pytest.fixture(scope="session")
def box_grid() -> BoxGrid:
    """Wide box used by the bookkeeping checks."""
    return BoxGrid(2, 8.0, 64)


@pytest.fixture(scope="session")
def theta() -> ThetaMatrix:
    return ThetaMatrix.block([THETA])


@pytest.fixture(scope="session")
def twisted_cfg(small_grid) -> Configuration:
    return make_config(small_grid, GWParams(0.5, 0.3, 0.4))


@pytest.fixture(scope="session")
def trivial_cfg(small_grid) -> Configuration:
    return make_config(small_grid, GWParams(0.5, 0.3, 0.4), twisted=False)


# acceptance report ----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        def order(line: str):
            label = line.split()[1].rstrip(":")
            head = label.split(".")[0]
            return (0, int(head), label) if head.isdigit() else (1, 0, label)

        for line in sorted(ACCEPTANCE_LINES, key=order):
            terminalreporter.write_line(line)
