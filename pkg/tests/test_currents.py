import numpy as np
import pytest

from twistgw import oracle
from twistgw.currents import (
    J_combined, J_current, K_current, R_current, VariationSpec, amt, divergence, emt, emt_pieces, emt_simplified,
    noether_bookkeeping, simplified_gap,
)
from twistgw.grid import BoxGrid, ScalarField, field_norm
from twistgw.model import GWParams, e_phi_residual

from conftest import gaussian, make_config

PARAMS = GWParams(0.5, 0.3, 0.4)


def bump(grid, cx=0.5, cy=0.0):
    x, y = grid.coordinate(0), grid.coordinate(1)
    return ScalarField(grid, np.exp(-((x - cx) ** 2 + (y - cy) ** 2)))


def test_amt_is_antisymmetric(twisted_cfg):
    m = amt(twisted_cfg)
    assert m.antisymmetry_defect() <= 1e-12 * m.norm()


def test_emt_assembles_from_noether_currents(twisted_cfg):
    cfg = twisted_cfg
    grid, inv = cfg.grid, cfg.star_cfg.theta.inverse
    t = emt_simplified(cfg)
    for nu in range(2):
        k_cur = K_current(cfg, -1.0 * cfg.dphi[nu])
        j_cur = J_combined(cfg, [-1.0 * cfg.dphia[c][nu] for c in range(2)])
        r_cur = R_current(cfg, [grid.constant(-2.0 * inv[mu, nu]) for mu in range(2)])
        for s in range(2):
            total = k_cur[(s,)] + j_cur[(s,)] + r_cur[(s,)] + (cfg.density if s == nu else grid.zeros())
            assert field_norm(total - t[(s, nu)]) <= 1e-10 * t.norm()


def test_plus_sign_on_frame_term_changes_the_emt(twisted_cfg):
    a = emt_pieces(twisted_cfg)
    b = emt_pieces(twisted_cfg, plus_sign=True)
    diff = max((a[k] - b[k]).norm() for k in a)
    assert diff > 1e-6


def test_K_current_variation_identity_prefers_xtilde(twisted_cfg):
    cfg = twisted_cfg
    eta, eps = bump(cfg.grid), 1e-4
    drho = (cfg.with_phi(cfg.phi + eps * eta).density - cfg.with_phi(cfg.phi - eps * eta).density) * (0.5 / eps)
    base = e_phi_residual(cfg) * eta
    res = {mode: field_norm(drho - base - divergence(K_current(cfg, eta, mode))[()]) / field_norm(drho)
           for mode in ("xtilde", "literal")}
    assert res["xtilde"] < 2e-2
    assert res["literal"] > 10 * res["xtilde"]


def test_J_routes_agree_without_harmonic_term(grid64):
    cfg = make_config(grid64, PARAMS.with_(omega_sq=0.0))
    dphic = [bump(grid64, 0.3, 0.2), bump(grid64, -0.4, 0.1)]
    a = divergence(J_current(cfg, dphic, "combined"))[()]
    b = divergence(J_current(cfg, dphic, "pieces"))[()]
    assert field_norm(a - b) <= 1e-4 * max(field_norm(a), field_norm(b))


def test_J_route_validation(twisted_cfg):
    with pytest.raises(ValueError):
        J_current(twisted_cfg, [twisted_cfg.phi] * 2, "neither")
    with pytest.raises(ValueError):
        K_current(twisted_cfg, twisted_cfg.phi, "other")


def test_commutative_limit_matches_canonical_tensors(box_grid):
    cfg = make_config(box_grid, PARAMS.with_(omega_sq=0.0), twisted=False, commutative=True)
    theta = cfg.star_cfg.theta.entries
    phia = [q.values for q in cfg.vielbein.phi_a]
    ref = oracle.canonical_emt(cfg.phi.values, phia, 0.5, 0.3, 0.0, box_grid, theta).values
    got = emt(cfg).stacked()
    inner = (slice(None), slice(None)) + box_grid.interior
    assert np.max(np.abs(got[inner] - ref[inner])) <= 1e-5 * np.max(np.abs(ref[inner]))


@pytest.mark.parametrize("which", ["emt", "amt", "dc"])
def test_simplified_forms_have_the_same_integrated_divergence(box_grid, which):
    cfg = make_config(box_grid, PARAMS)
    r = simplified_gap(cfg, which)
    assert r["gap"] <= 1e-5 * r["scale"]


def test_variation_spec_validation():
    with pytest.raises(ValueError):
        VariationSpec("boost")


@pytest.mark.parametrize("spec", [VariationSpec("translation", (0,)), VariationSpec("translation", (1,)),
                                  VariationSpec("rotation", (0, 1)), VariationSpec("parity")],
                         ids=["translation-x", "translation-y", "rotation", "parity"])
def test_noether_bookkeeping(box_grid, spec):
    cfg = make_config(box_grid, PARAMS)
    r = noether_bookkeeping(cfg, spec)
    assert r.defect <= 1e-5, r.to_dict()


def test_bookkeeping_on_vacuum_is_trivially_zero(box_grid):
    cfg = make_config(box_grid, PARAMS, twisted=False, phi=box_grid.zeros())
    r = noether_bookkeeping(cfg, VariationSpec("translation", (0,)))
    assert r.defect == 0.0 and "noise_floor" in r.parts
