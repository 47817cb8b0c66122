import numpy as np
import pytest

from twistgw.geometry import (
    DegenerateFrame, ThetaMatrix, X_apply, Xtilde_apply, build_vielbein, identity_vielbein, twisted_theta,
    xtilde_coords,
)
from twistgw.grid import ScalarField, partial

from conftest import sinusoidal_twist


def test_block_theta_and_inverse():
    th = ThetaMatrix.block([0.7, 1.3])
    assert th.dim == 4
    assert th.entries[0, 1] == 0.7 and th.entries[3, 2] == -1.3
    assert np.allclose(th.entries @ th.inverse, np.eye(4))


@pytest.mark.parametrize("mat", [[[0, 1], [1, 0]], [[0, 0], [0, 0]], [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]])
def test_theta_validation(mat):
    with pytest.raises(ValueError):
        ThetaMatrix(np.array(mat, dtype=float))


def test_identity_vielbein_is_trivial(small_grid):
    v = identity_vielbein(small_grid)
    assert v.is_trivial()
    assert np.allclose(v.det.values, 1.0)


def test_constant_scalars_are_degenerate(small_grid):
    with pytest.raises(DegenerateFrame):
        build_vielbein([small_grid.constant(1.0), small_grid.constant(2.0)])


def test_sign_changing_determinant_is_degenerate(small_grid):
    with pytest.raises(DegenerateFrame) as info:
        build_vielbein(sinusoidal_twist(small_grid, amp=5.0, damping=1.0))
    assert info.value.point is not None


def test_twisted_frame_inverse(small_grid):
    v = build_vielbein(sinusoidal_twist(small_grid))
    assert not v.is_trivial()
    for a in range(2):
        for b in range(2):
            acc = sum(v.e_frame(a, mu).values * v.e_inv(mu, b).values for mu in range(2))
            assert np.allclose(acc, 1.0 if a == b else 0.0)


def test_X_is_directional_derivative(small_grid):
    v = build_vielbein(sinusoidal_twist(small_grid))
    x, y = small_grid.coordinate(0), small_grid.coordinate(1)
    f = ScalarField(small_grid, np.exp(-(x ** 2 + y ** 2) / 3))
    # X_a phi^b = delta_a^b for the scalars that define the frame
    for a in range(2):
        for b in range(2):
            got = X_apply(v, a, v.phi_a[b]).values[small_grid.interior]
            assert np.allclose(got, 1.0 if a == b else 0.0, atol=1e-6)
    assert np.max(np.abs(X_apply(v, 0, small_grid.constant(2.0)).values)) == 0.0
    direct = v.e_inv(0, 0).values * partial(f, 0).values + v.e_inv(1, 0).values * partial(f, 1).values
    assert np.allclose(X_apply(v, 0, f).values, direct)


def test_xtilde_operator_trivial_frame(small_grid, theta):
    v = identity_vielbein(small_grid)
    f = small_grid.x(1) ** 2 if hasattr(small_grid.x(1), "__pow__") else small_grid.x(1) * small_grid.x(1)
    got = Xtilde_apply(theta, v, 0, f)
    want = 0.5j * 0.7 * partial(f, 1)
    assert np.allclose(got.values, want.values)
    assert np.allclose(Xtilde_apply(theta, v, 0, f, scale=0.5).values, 0.5 * want.values)


def test_xtilde_coordinates(small_grid, theta):
    xt = xtilde_coords(theta, small_grid)
    x, y = small_grid.coordinate(0), small_grid.coordinate(1)
    # Theta^-1 = [[0, -1/t], [1/t, 0]]
    assert np.allclose(xt[0].values, -2.0 * y / 0.7)
    assert np.allclose(xt[1].values, 2.0 * x / 0.7)


def test_twisted_theta_reduces_to_theta(small_grid, theta):
    t = twisted_theta(theta, identity_vielbein(small_grid))
    assert np.allclose(t[(0, 1)].values, 0.7)
    assert t.antisymmetry_defect() < 1e-20
