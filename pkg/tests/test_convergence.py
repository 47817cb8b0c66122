import math

import numpy as np
import pytest

from twistgw.convergence import associativity_defect, fit_slope, format_table, scaling_row, scaling_table
from twistgw.geometry import ThetaMatrix, identity_vielbein
from twistgw.grid import BoxGrid, ScalarField
from twistgw.star import StarConfig

GRID = BoxGrid(2, 6.0, 48)


def probes():
    x, y = GRID.coordinate(0), GRID.coordinate(1)
    g = lambda cx, cy: ScalarField(GRID, np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / 2.0))
    return [g(0.0, 0.0), g(1.0, 0.0), g(0.0, -1.0)]


def test_fit_slope():
    scales = [1.0, 0.5, 0.25]
    assert fit_slope(scales, [s ** 3 for s in scales]) == pytest.approx(3.0)
    assert fit_slope([1.0], [0.1]) is None


def test_single_scale_row_has_no_slope():
    sc = StarConfig(ThetaMatrix.block([0.7]), identity_vielbein(GRID), N=2)
    f, g, h = probes()
    row = scaling_row("associativity", sc, lambda c: associativity_defect(c, f, g, h), 1.0, scales=[1.0])
    assert row.slope is None and not row.exact


def test_exact_rows_are_flagged():
    sc = StarConfig(ThetaMatrix.block([0.7]), identity_vielbein(GRID), N=2)
    one = GRID.constant(1.0)
    f = probes()[0]
    row = scaling_row("associativity", sc, lambda c: associativity_defect(c, one, f, one), 1.0)
    assert row.exact and row.slope is None


def test_associativity_slope_tracks_truncation_order():
    sc = StarConfig(ThetaMatrix.block([0.7]), identity_vielbein(GRID), N=1)
    rows = scaling_table(sc, probes(), orders=(1, 2))
    assoc = [r for r in rows if r.identity == "associativity"]
    for r in assoc:
        assert abs(r.slope - (r.N + 1)) <= 0.5, r.to_dict()
    assert "associativity" in format_table(rows)
    assert all(math.isfinite(x) for r in rows for x in r.ratios)
