import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from twistgw.geometry import ThetaMatrix, build_vielbein, identity_vielbein
from twistgw.grid import BoxGrid, ScalarField, field_norm
from twistgw.star import StarConfig, brace_xtilde, delta_pow, star, star_anticommutator, star_commutator

from conftest import sinusoidal_twist

GRID = BoxGrid(2, 6.0, 48)
FLAT = identity_vielbein(GRID)
TWISTED = build_vielbein(sinusoidal_twist(GRID))
X, Y = GRID.coordinate(0), GRID.coordinate(1)

settings.register_profile("twistgw", max_examples=15, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("twistgw")


def blob(cx, cy, width, phase=0.0):
    env = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * width ** 2))
    return ScalarField(GRID, env * np.cos(0.8 * X + phase * Y))


blobs = st.builds(blob, st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(1.2, 1.8), st.floats(-1.0, 1.0))
thetas = st.floats(0.2, 1.5)


def cfg(theta=0.7, N=4, twisted=True, **kw):
    return StarConfig(ThetaMatrix.block([theta]), TWISTED if twisted else FLAT, N=N, **kw)


def test_delta_pow_zero_is_pointwise_product():
    f, g = blob(0, 0, 1.5), blob(0.3, 0, 1.5)
    assert np.array_equal(delta_pow(cfg(), f, g, 0).values, (f * g).values)


def test_delta_one_on_coordinates():
    # Delta(x, y) = (i/2) Theta^{01} on the flat frame
    d = delta_pow(cfg(twisted=False), GRID.x(0), GRID.x(1), 1)
    assert np.allclose(d.interior_values(), 0.5j * 0.7)


def test_delta_of_field_with_itself_vanishes_at_odd_order():
    f = blob(0.2, -0.1, 1.4, 0.5)
    c = cfg()
    for n in (1, 3):
        assert field_norm(delta_pow(c, f, f, n)) < 1e-14


def test_coordinate_commutator():
    c = cfg(twisted=False)
    comm = star_commutator(c, GRID.x(0), GRID.x(1))
    assert np.allclose(comm.interior_values(), 1j * 0.7)


def test_unit_law_exact():
    f = blob(0.1, 0.2, 1.5)
    one = GRID.constant(1.0)
    c = cfg()
    assert np.array_equal(star(c, f, one).values, f.values)
    assert np.array_equal(star(c, one, f).values, f.values)


def test_commutative_mode_is_pointwise():
    f, g = blob(0, 0, 1.5), blob(0.5, 0, 1.3, 0.4)
    c = cfg(commutative=True)
    assert np.array_equal(star(c, f, g).values, (f * g).values)
    assert field_norm(c.calc.T(f, g) - 0.5 * 0 - c.calc.T(f, g)) == 0.0


def test_zero_scale_requires_commutative_mode():
    with pytest.raises(ValueError):
        cfg(theta_scale=0.0)
    with pytest.raises(ValueError):
        cfg(N=-1)


def test_operator_truncation_orders():
    assert cfg(N=0).operator_order == 0
    assert cfg(N=4).operator_order == 3
    c = cfg(N=4).calc
    assert set(c.series_coefficients("T")) == {0, 1, 2, 3}
    assert set(c.series_coefficients("S")) == {0, 2}
    assert set(c.series_coefficients("R")) == {1, 3}
    assert c.series_coefficients("T")[2] == pytest.approx(1 / 6)


def test_zeroth_order_operators():
    f, g = blob(0, 0, 1.5), blob(0.5, 0, 1.3, 0.4)
    c = cfg(N=0).calc
    assert np.array_equal(c.T(f, g).values, (f * g).values)
    assert np.array_equal(c.S(f, g).values, (f * g).values)
    assert field_norm(c.R(f, g)) == 0.0


def test_brace_with_xtilde_on_flat_frame():
    # {x~_mu, f} = 2 x~_mu f on the flat frame: the odd terms cancel and the
    # second-order jets of a linear function vanish
    f = blob(0.2, 0.1, 1.5)
    c = cfg(twisted=False)
    br = brace_xtilde(c, f)
    xt = c.calc.xtilde
    for mu in range(2):
        assert field_norm(br[mu] - 2.0 * xt[mu] * f) < 1e-9 * field_norm(xt[mu] * f)


def test_cross_checked_commutators_agree():
    f, g = blob(0, 0, 1.5), blob(0.5, 0, 1.3, 0.4)
    c = cfg()
    star_commutator(c, f, g, cross_check=True)
    star_anticommutator(c, f, g, cross_check=True)


@given(blobs, st.integers(0, 5), thetas)
def test_property_unit_law(f, N, theta):
    c = cfg(theta, N)
    one = GRID.constant(1.0)
    assert np.array_equal(star(c, one, f).values, f.values)
    assert np.array_equal(star(c, f, one).values, f.values)


@given(blobs, blobs, st.integers(0, 5), thetas)
def test_property_reality(f, g, N, theta):
    c = cfg(theta, N).calc
    scale = field_norm(f * g)
    assert field_norm(ScalarField(GRID, c.anti(f, g).imag)) <= 1e-12 * scale
    assert field_norm(ScalarField(GRID, c.comm(f, g).real)) <= 1e-12 * scale


@given(blobs, blobs, st.integers(1, 5), thetas)
def test_property_operator_identities(f, g, N, theta):
    c = cfg(theta, N).calc
    fg = f * g
    scale = max(field_norm(c.star(f, g)), field_norm(fg))
    tT, tS, tR = c.total_X_jet("T", f, g), c.total_X_jet("S", f, g), c.total_X_jet("R", f, g)
    assert field_norm(c.star(f, g) - fg - tT) <= 1e-12 * scale
    assert field_norm(c.comm(f, g) - 2.0 * tS) <= 1e-12 * scale
    assert field_norm(c.anti(f, g) - 2.0 * fg - 2.0 * tR) <= 1e-12 * scale
    assert field_norm(tT - c.total_X_jet("T", g, f) - 2.0 * tS) <= 1e-12 * scale
    assert field_norm(tS + c.total_X_jet("S", g, f)) <= 1e-12 * scale


@given(blobs, blobs, st.integers(1, 4))
def test_property_swap_conjugates_real_fields(f, g, N):
    # for real f, g: f * g evaluated with swapped arguments is the complex conjugate
    c = cfg(0.7, N).calc
    assert field_norm(c.star(g, f) - ScalarField(GRID, np.conj(c.star(f, g).values))) <= 1e-13 * field_norm(f * g)


def test_stencil_route_is_only_stencil_accurate():
    f, g = blob(0, 0, 1.5), blob(0.5, 0, 1.3, 0.4)
    c = cfg().calc
    stencil = field_norm(c.star(f, g) - f * g - c.total_X(c.T, f, g)) / field_norm(f * g)
    jet = field_norm(c.star(f, g) - f * g - c.total_X_jet("T", f, g)) / field_norm(f * g)
    assert jet < 1e-13 < stencil < 1e-3


def test_factorial_weights_of_product():
    f, g = blob(0, 0, 1.5), blob(0.5, 0, 1.3, 0.4)
    c = cfg(N=3)
    want = sum(delta_pow(c, f, g, n) * (1 / math.factorial(n)) for n in range(1, 4)) + f * g
    assert field_norm(star(c, f, g) - want) < 1e-15
