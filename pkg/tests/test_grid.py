import numpy as np
import pytest

from twistgw.grid import (
    BoxGrid, GridError, ScalarField, StencilSpec, band_max, check_decay, derivative_matrix, field_norm,
    gradient, integrate, integrate_abs, partial,
)


def test_grid_geometry():
    g = BoxGrid(2, 6.0, 49)
    assert g.shape == (49, 49)
    assert g.spacing == pytest.approx(0.25)
    assert g.axis[0] == -6.0 and g.axis[-1] == pytest.approx(6.0)
    assert g.margin == StencilSpec().half_width + 2
    assert g.header() == {"D": 2, "n": 49, "L": 6.0, "margin": 6}


@pytest.mark.parametrize("kw", [dict(dim=3, half_width=1.0, n=20), dict(dim=2, half_width=-1.0, n=20),
                                dict(dim=2, half_width=1.0, n=10, margin=5)])
def test_grid_rejects_bad_shapes(kw):
    with pytest.raises(GridError):
        BoxGrid(**kw)


def test_stencil_order_must_be_even():
    with pytest.raises(GridError):
        StencilSpec(7)


def test_derivative_exact_on_polynomials(small_grid):
    x, y = small_grid.coordinate(0), small_grid.coordinate(1)
    f = ScalarField(small_grid, x ** 5 - 2 * x ** 2 * y ** 3 + y)
    assert np.allclose(partial(f, 0).values, 5 * x ** 4 - 4 * x * y ** 3, atol=1e-8)
    assert np.allclose(partial(f, 1).values, -6 * x ** 2 * y ** 2 + 1, atol=1e-8)


def test_derivative_of_constant_is_zero(small_grid):
    assert np.max(np.abs(partial(small_grid.constant(3.0), 0).values)) < 1e-12


def test_derivative_converges_at_stencil_order():
    errs = []
    for n in (33, 65):
        g = BoxGrid(1 * 2, 3.0, n)
        x = g.coordinate(0)
        f = ScalarField(g, np.sin(2 * x))
        errs.append(np.max(np.abs(partial(f, 0).values - 2 * np.cos(2 * x))[g.interior]))
    assert np.log2(errs[0] / errs[1]) > 7.0


def test_derivative_matrix_rows_sum_to_zero():
    m = derivative_matrix(20, 0.1, 8)
    assert np.max(np.abs(m.sum(axis=1))) < 1e-9


def test_integrals_and_norms(small_grid):
    f = ScalarField(small_grid, np.exp(-small_grid.radius_sq()))
    assert integrate(f).real == pytest.approx(np.pi, rel=1e-8)
    assert integrate_abs(f * -1.0) == pytest.approx(np.pi, rel=1e-8)
    assert 0.9 < field_norm(f) <= 1.0
    assert check_decay(f, 1e-8) and not check_decay(f, 1e-10)
    assert band_max(small_grid.constant(1.0)) == 1.0


def test_mirrored_maps_x_to_minus_x(small_grid):
    x = small_grid.x(0)
    assert np.allclose(x.mirrored().values, -x.values)


def test_gradient_length(small_grid):
    assert len(gradient(small_grid.x(0))) == 2


def test_field_arithmetic_and_grid_mismatch(small_grid):
    f = small_grid.x(0)
    assert np.allclose((2.0 * f - f + 1.0).values, f.values + 1.0)
    with pytest.raises(Exception):
        _ = f + BoxGrid(2, 6.0, 40).x(0)
