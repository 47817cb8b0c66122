"""Noether currents of the twisted GW model.

Every current with a frame sum has the shape ``e e_b^sigma [ ... ]`` where the
bracket uses ``T(f, X~^b g)`` or ``S(f, X~^b g)``; :func:`_frame_current` does
that contraction once per ``b``. The antisymmetrisation ``x_[nu d_rho] f`` is
``x_nu d_rho f - x_rho d_nu f``; the AMT is assembled as ``H[nu, rho] -
H[rho, nu]`` so it is antisymmetric to rounding.

Divergences always act on the first index. Variations ``delta d_mu f`` are
``d_mu (delta f)`` taken by stencil.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import ScalarField, field_norm, integrate, integrate_abs, partial
from .model import PIECES, Configuration, constraint_residual, e_mixed_pieces, e_phi_pieces, e_phi_residual
from .tensor import TensorField

B_MODES = ("xtilde", "literal")
NOISE_FACTOR = 10.0


# helpers ------------------------------------------------------------------

def _frame_current(cfg: Configuration, bracket: Callable[[int], ScalarField], scale: float = 1.0) -> list[ScalarField]:
    """``sigma -> scale * e e_b^sigma bracket(b)`` summed over ``b``."""
    d = cfg.dim
    v = cfg.vielbein
    inner = [bracket(b) for b in range(d)]
    out = []
    for sigma in range(d):
        acc = cfg.grid.zeros()
        for b in range(d):
            acc = acc + v.e_inv(sigma, b) * inner[b]
        out.append((scale * acc) * cfg.e)
    return out


def _vec(fields: Sequence[ScalarField], label: str = "sigma") -> TensorField:
    return TensorField.from_list(list(fields), labels=(label,))


def _add(a: list[ScalarField], b: list[ScalarField]) -> list[ScalarField]:
    return [x + y for x, y in zip(a, b)]


def _comps(t: TensorField) -> list[ScalarField]:
    return [t[(k,)] for k in range(t.grid.dim)]


def _sum_pieces(pieces: dict[str, TensorField]) -> TensorField:
    items = list(pieces.values())
    out = items[0]
    for t in items[1:]:
        out = out + t
    return out


def coordinates(cfg: Configuration) -> list[ScalarField]:
    return [cfg.grid.x(mu) for mu in range(cfg.dim)]


# K ------------------------------------------------------------------------

def K_pieces(cfg: Configuration, dphi: ScalarField, b_mode: str = "xtilde") -> dict[str, TensorField]:
    """The four contributions to ``K^sigma`` for the variation ``dphi``."""
    if b_mode not in B_MODES:
        raise ValueError(f"b_mode must be one of {B_MODES}")
    c, p, d = cfg.calc, cfg.params, cfg.dim
    e, einv, phi = cfg.e, cfg.einv, cfg.phi
    ddphi = [cfg.d(dphi, mu) for mu in range(d)]
    dphi_einv = c.star(dphi, einv)

    def k0(b):
        out = cfg.grid.zeros()
        for mu in range(d):
            out = out + c.T(ddphi[mu], 0.5 * c.Xt(b, cfg.brace_dphi_einv[mu]))
            out = out + c.S(cfg.dphi[mu], c.Xt(b, c.star(ddphi[mu], einv)))
        return out

    first = [0.5 * e * dphi * cfg.brace_dphi_einv[s] for s in range(d)]
    kin = _add(first, _frame_current(cfg, k0))

    def km(b):
        return 0.5 * c.T(dphi, c.Xt(b, cfg.brace_phi_einv)) + c.S(phi, c.Xt(b, dphi_einv))

    mass = _frame_current(cfg, km, p.mass_sq) if p.mass_sq else [cfg.grid.zeros()] * d

    if p.lam:
        m3 = c.multi([dphi, phi, phi, einv])
        m2 = c.multi([dphi, phi, einv])

        def kl(b):
            out = (1.0 / 24.0) * c.T(dphi, c.Xt(b, cfg.quartic_brace))
            out = out + (1.0 / 12.0) * (c.S(phi, c.Xt(b, m3)) + c.S(cfg.phi2, c.Xt(b, m2))
                                        + c.S(cfg.phi3, c.Xt(b, dphi_einv)))
            return out
        quart = _frame_current(cfg, kl, p.lam)
    else:
        quart = [cfg.grid.zeros()] * d

    if p.omega_sq:
        xt = cfg.xt
        t1 = [c.multi([dphi, cfg.brace_xt_phi[mu], einv]) for mu in range(d)]
        t2 = [c.anti(xt[mu], c.star(phi, xt[mu])) for mu in range(d)]
        t3 = [c.multi([dphi, xt[mu], einv]) for mu in range(d)]

        def third(b, f):
            return c.Xt(b, f) if b_mode == "xtilde" else c.X(b, f)

        def kh(b):
            out = (1.0 / 8.0) * c.T(dphi, c.Xt(b, cfg.harmonic_brace))
            for mu in range(d):
                out = out + 0.25 * c.S(xt[mu], c.Xt(b, t1[mu]))
                out = out + 0.25 * c.S(t2[mu], third(b, dphi_einv))
                out = out + 0.25 * c.S(cfg.brace_xt_phi[mu], c.Xt(b, t3[mu]))
            return out
        harm = _frame_current(cfg, kh, p.omega_sq)
    else:
        harm = [cfg.grid.zeros()] * d
    return {"kinetic": _vec(kin), "mass": _vec(mass), "quartic": _vec(quart), "harmonic": _vec(harm)}


def K_current(cfg: Configuration, dphi: ScalarField, b_mode: str = "xtilde") -> TensorField:
    return _sum_pieces(K_pieces(cfg, dphi, b_mode))


# R ------------------------------------------------------------------------

def R_current(cfg: Configuration, dxt: Sequence[ScalarField]) -> TensorField:
    """Current of an ``x~`` variation ``dxt[mu]``."""
    c, p, d = cfg.calc, cfg.params, cfg.dim
    if not p.omega_sq:
        return _vec([cfg.grid.zeros()] * d)
    phi, einv = cfg.phi, cfg.einv
    outer = [c.anti(phi, nest) for nest in cfg.harmonic_nest]
    a2 = [c.multi([dxt[mu], phi, einv]) for mu in range(d)]
    s3 = [c.anti(phi, c.star(cfg.xt[mu], phi)) for mu in range(d)]
    a3 = [c.star(dxt[mu], einv) for mu in range(d)]
    a4 = [c.multi([dxt[mu], cfg.brace_xt_phi[mu], einv]) for mu in range(d)]

    def br(b):
        out = cfg.grid.zeros()
        for mu in range(d):
            out = out + c.T(dxt[mu], c.Xt(b, outer[mu]))
            out = out + 2.0 * c.S(cfg.brace_xt_phi[mu], c.Xt(b, a2[mu]))
            out = out + 2.0 * c.S(s3[mu], c.Xt(b, a3[mu]))
            out = out + 2.0 * c.S(phi, c.Xt(b, a4[mu]))
        return out
    return _vec(_frame_current(cfg, br, p.omega_sq / 8.0))


# J ------------------------------------------------------------------------

def _lagrangian_terms(cfg: Configuration, lag: ScalarField, dphic: Sequence[ScalarField]) -> Callable[[int], ScalarField]:
    """``-L * (dphi^b e^-1) + dphi^b (L * e^-1) + T(X_c L, X~^b (dphi^c e^-1))``."""
    c, d, einv = cfg.calc, cfg.dim, cfg.einv
    l_einv = c.star(lag, einv)
    xl = [c.X(k, lag) for k in range(d)]
    w = [dphic[k] * einv for k in range(d)]

    def br(b):
        out = -c.star(lag, w[b]) + dphic[b] * l_einv
        for k in range(d):
            out = out + c.T(xl[k], c.Xt(b, w[k]))
        return out
    return br


def _twist_bracket(cfg: Configuration, dphic: Sequence[ScalarField]) -> Callable[[int], ScalarField]:
    """Twist-kinetic bracket shared by both J routes (without the outer 1/2)."""
    c, d, einv = cfg.calc, cfg.dim, cfg.einv
    V = [[sum((dphic[k] * c.X(k, cfg.dphia[a][mu]) for k in range(d)), cfg.grid.zeros())
          for a in range(d)] for mu in range(d)]
    dd = [[cfg.d(dphic[a], mu) for a in range(d)] for mu in range(d)]
    v_einv = [[c.star(V[mu][a], einv) for a in range(d)] for mu in range(d)]
    dd_einv = [[c.star(dd[mu][a], einv) for a in range(d)] for mu in range(d)]

    def br(b):
        out = cfg.grid.zeros()
        for mu in range(d):
            for a in range(d):
                brace = c.Xt(b, cfg.brace_dphia_einv[a][mu])
                out = out - c.T(V[mu][a], brace)
                out = out - 2.0 * c.S(cfg.dphia[a][mu], c.Xt(b, v_einv[mu][a]))
                out = out + 2.0 * c.S(cfg.dphia[a][mu], c.Xt(b, dd_einv[mu][a]))
                out = out + c.T(dd[mu][a], brace)
        return out
    return br


def _xc(cfg: Configuration, dphic: Sequence[ScalarField], f: ScalarField) -> ScalarField:
    """``dphi^c X_c f``."""
    out = cfg.grid.zeros()
    for k in range(cfg.dim):
        out = out + dphic[k] * cfg.calc.X(k, f)
    return out


def J_combined(cfg: Configuration, dphic: Sequence[ScalarField], b_mode: str = "xtilde") -> TensorField:
    """``J^sigma`` through ``K(dphi -> -dphi^c X_c phi)`` and ``R(dx~ -> -dphi^c X_c x~)``."""
    c, d, e, einv = cfg.calc, cfg.dim, cfg.e, cfg.einv
    dphic = list(dphic)
    shift = -_xc(cfg, dphic, cfg.phi)
    out = _comps(K_current(cfg, shift, b_mode))
    dxt = [-_xc(cfg, dphic, x) for x in cfg.xt]
    out = _add(out, _comps(R_current(cfg, dxt)))
    xc_phi = _xc(cfg, dphic, cfg.phi)
    for s in range(d):
        extra = 0.5 * e * xc_phi * cfg.brace_dphi_einv[s]
        for k in range(d):
            extra = extra + 0.5 * e * dphic[k] * cfg.brace_dphia_einv[k][s]
        out[s] = out[s] + extra
    # W_mu = d_mu (dphi^c e_c^rho) d_rho phi
    v = cfg.vielbein
    W = []
    for mu in range(d):
        acc = cfg.grid.zeros()
        for rho in range(d):
            vec = cfg.grid.zeros()
            for k in range(d):
                vec = vec + dphic[k] * v.e_inv(rho, k)
            acc = acc + cfg.d(vec, mu) * cfg.dphi[rho]
        W.append(acc)
    w_einv = [c.star(W[mu], einv) for mu in range(d)]
    lag_br = _lagrangian_terms(cfg, cfg.lagrangian, dphic)

    def br(b):
        out_b = lag_br(b)
        for mu in range(d):
            out_b = out_b + 0.5 * c.T(W[mu], c.Xt(b, cfg.brace_dphi_einv[mu]))
            out_b = out_b + c.S(cfg.dphi[mu], c.Xt(b, w_einv[mu]))
        return out_b
    out = _add(out, _frame_current(cfg, br))
    out = _add(out, _frame_current(cfg, _twist_bracket(cfg, dphic), 0.5))
    return _vec(out)


def J_pieces(cfg: Configuration, dphic: Sequence[ScalarField]) -> dict[str, TensorField]:
    """``J^sigma(0)``, ``J^sigma(m^2)``, ``J^sigma(lambda)`` and ``J^sigma(Omega^2)``."""
    c, p, d, e, einv, phi = cfg.calc, cfg.params, cfg.dim, cfg.e, cfg.einv, cfg.phi
    dphic = list(dphic)
    pieces = cfg.pieces
    zero = [cfg.grid.zeros()] * d

    # J(0)
    U = [_xc(cfg, dphic, cfg.dphi[mu]) for mu in range(d)]
    u_einv = [c.star(U[mu], einv) for mu in range(d)]
    lag0 = _lagrangian_terms(cfg, pieces["kinetic"] + pieces["twist_kinetic"], dphic)
    tw = _twist_bracket(cfg, dphic)

    def b0(b):
        out = 0.5 * tw(b)
        for mu in range(d):
            out = out - 0.5 * c.T(U[mu], c.Xt(b, cfg.brace_dphi_einv[mu]))
            out = out - c.S(cfg.dphi[mu], c.Xt(b, u_einv[mu]))
        return out + lag0(b)
    j0 = _frame_current(cfg, b0)
    for s in range(d):
        first = cfg.grid.zeros()
        for k in range(d):
            first = first + dphic[k] * cfg.brace_dphia_einv[k][s]
        j0[s] = j0[s] + 0.5 * e * first

    Q = _xc(cfg, dphic, phi)
    q_einv = c.star(Q, einv)

    # J(m^2)
    if p.mass_sq:
        lagm = _lagrangian_terms(cfg, pieces["mass"], dphic)

        def bm(b):
            out = 0.5 * p.mass_sq * (-c.T(Q, c.Xt(b, cfg.brace_phi_einv)) + 2.0 * c.S(q_einv, c.Xt(b, phi)))
            return out + lagm(b)
        jm = _frame_current(cfg, bm)
    else:
        jm = zero

    # J(lambda)
    if p.lam:
        lagl = _lagrangian_terms(cfg, pieces["quartic"], dphic)
        q3 = c.multi([Q, phi, phi, einv])
        q2 = c.multi([Q, phi, einv])

        def bl(b):
            out = -c.T(Q, c.Xt(b, cfg.quartic_brace))
            out = out - 2.0 * (c.S(phi, c.Xt(b, q3)) + c.S(cfg.phi2, c.Xt(b, q2)) + c.S(cfg.phi3, c.Xt(b, q_einv)))
            return (p.lam / 24.0) * out + lagl(b)
        jl = _frame_current(cfg, bl)
    else:
        jl = zero

    # J(Omega^2)
    if p.omega_sq:
        lagh = _lagrangian_terms(cfg, pieces["harmonic"], dphic)
        P = [_xc(cfg, dphic, cfg.xt_phi[mu]) for mu in range(d)]
        p_einv = [c.star(P[mu], einv) for mu in range(d)]
        br_xp = [c.anti(cfg.xt_phi[mu], einv) for mu in range(d)]

        def bh(b):
            out = cfg.grid.zeros()
            for mu in range(d):
                out = out - c.T(P[mu], c.Xt(b, br_xp[mu]))
                out = out - 2.0 * c.S(cfg.xt_phi[mu], c.Xt(b, p_einv[mu]))
            return (0.5 * p.omega_sq) * out + lagh(b)
        jh = _frame_current(cfg, bh)
    else:
        jh = zero
    return {"kinetic": _vec(j0), "mass": _vec(jm), "quartic": _vec(jl), "harmonic": _vec(jh)}


def J_current(cfg: Configuration, dphic: Sequence[ScalarField], route: str = "auto",
              b_mode: str = "xtilde") -> TensorField:
    """``J^sigma`` by either assembly route.

    The combined route treats ``x~`` as a star factor and is the consistent
    current for ``xt_mode="symmetrized"``; the four-piece route treats
    ``x~ phi`` as one field and is consistent for ``xt_mode="pointwise"``.
    Without the harmonic term both agree up to stencil error. ``route="auto"``
    picks the one matching the configuration.
    """
    if route == "auto":
        route = "combined" if cfg.xt_mode == "symmetrized" else "pieces"
    if route == "pieces":
        return _sum_pieces(J_pieces(cfg, dphic))
    if route == "combined":
        return J_combined(cfg, dphic, b_mode)
    raise ValueError("route must be 'pieces' or 'combined'")


# divergence ---------------------------------------------------------------

def divergence(t: TensorField, spec=None) -> TensorField:
    """``d_mu t[mu, ...]``; returns a tensor of rank ``t.rank - 1``."""
    if t.rank < 1:
        raise ValueError("divergence needs rank >= 1")
    grid = t.grid
    d = grid.dim
    kw = {} if spec is None else {"spec": spec}
    if t.rank == 1:
        acc = grid.zeros()
        for mu in range(d):
            acc = acc + partial(t[(mu,)], mu, **kw)
        return TensorField(grid, 0, {(): acc})
    comps = {}
    for rest in np.ndindex(*([d] * (t.rank - 1))):
        acc = grid.zeros()
        for mu in range(d):
            acc = acc + partial(t[(mu,) + rest], mu, **kw)
        comps[rest] = acc
    return TensorField(grid, t.rank - 1, comps, labels=t.labels[1:])


# EMT ----------------------------------------------------------------------

def _theta_inv(cfg: Configuration) -> np.ndarray:
    return cfg.star_cfg.theta.inverse


def emt_pieces(cfg: Configuration, simplified: bool = False, plus_sign: bool = False) -> dict[str, TensorField]:
    """``T^mu_nu`` split by the Lagrangian piece each term belongs to.

    The frame term ``T(X_c L, X~^b (e^-1 d_nu phi^c))`` enters with the sign
    that makes ``T`` equal to the translation Noether current; pass
    ``plus_sign=True`` for the opposite sign.
    """
    xl_sign = 1.0 if plus_sign else -1.0
    c, p, d, e, einv, phi = cfg.calc, cfg.params, cfg.dim, cfg.e, cfg.einv, cfg.phi
    pieces = cfg.pieces
    w = [[einv * cfg.dphia[k][nu] for k in range(d)] for nu in range(d)]  # e^-1 d_nu phi^k
    out: dict[str, dict] = {name: {} for name in PIECES}
    for name in PIECES:
        lag = pieces[name]
        if not lag.values.any():
            for mu in range(d):
                for nu in range(d):
                    out[name][(mu, nu)] = cfg.grid.zeros()
            continue
        xl = [c.X(k, lag) for k in range(d)]
        for nu in range(d):
            def br(b, nu=nu, lag=lag, xl=xl):
                acc = c.star(lag, w[nu][b])
                for k in range(d):
                    acc = acc + xl_sign * c.T(xl[k], c.Xt(b, w[nu][k]))
                return acc
            comp = _frame_current(cfg, br)
            for mu in range(d):
                out[name][(mu, nu)] = comp[mu]
    for mu in range(d):
        for nu in range(d):
            out["kinetic"][(mu, nu)] = out["kinetic"][(mu, nu)] - 0.5 * e * cfg.dphi[nu] * cfg.brace_dphi_einv[mu]
            tw = cfg.grid.zeros()
            for k in range(d):
                tw = tw + cfg.dphia[k][nu] * cfg.brace_dphia_einv[k][mu]
            out["twist_kinetic"][(mu, nu)] = out["twist_kinetic"][(mu, nu)] - 0.5 * e * tw
    if p.omega_sq and not simplified:
        inv = _theta_inv(cfg)
        xt = cfg.xt
        phi_einv = c.star(phi, einv)
        s2 = [c.anti(phi, c.star(xt[g], phi)) for g in range(d)]
        s3 = [c.star(cfg.brace_xt_phi[g], einv) for g in range(d)]
        per_gamma = []
        for g in range(d):
            def br(b, g=g):
                acc = c.S(cfg.brace_xt_phi[g], c.Xt(b, phi_einv))
                acc = acc + c.S(s2[g], c.Xt(b, einv))
                acc = acc + c.S(phi, c.Xt(b, s3[g]))
                return acc
            per_gamma.append(_frame_current(cfg, br, p.omega_sq))
        for mu in range(d):
            for nu in range(d):
                acc = out["harmonic"][(mu, nu)]
                for g in range(d):
                    if inv[g, nu] != 0:
                        acc = acc + inv[g, nu] * per_gamma[g][mu]
                out["harmonic"][(mu, nu)] = acc
    return {name: TensorField(cfg.grid, 2, comps, labels=("mu", "nu")) for name, comps in out.items()}


def emt(cfg: Configuration) -> TensorField:
    return _sum_pieces(emt_pieces(cfg))


def emt_simplified(cfg: Configuration) -> TensorField:
    return _sum_pieces(emt_pieces(cfg, simplified=True))


# AMT ----------------------------------------------------------------------

def amt_pieces(cfg: Configuration, simplified: bool = False) -> dict[str, TensorField]:
    """``M^mu_{nu rho}`` split by Lagrangian piece, built as ``H[nu,rho] - H[rho,nu]``."""
    c, p, d, e, einv, phi = cfg.calc, cfg.params, cfg.dim, cfg.e, cfg.einv, cfg.phi
    pieces = cfg.pieces
    xs = coordinates(cfg)
    # H[name][(mu, nu, rho)] before antisymmetrisation
    H: dict[str, dict] = {name: {} for name in PIECES}
    zero = cfg.grid.zeros()
    for name in PIECES:
        for idx in np.ndindex(d, d, d):
            H[name][idx] = zero
    # e^-1 x_nu d_rho phi^k
    w = {(nu, rho): [einv * xs[nu] * cfg.dphia[k][rho] for k in range(d)] for nu in range(d) for rho in range(d)}
    for name in PIECES:
        lag = pieces[name]
        if not lag.values.any():
            continue
        xl = [c.X(k, lag) for k in range(d)]
        for nu in range(d):
            for rho in range(d):
                if nu == rho:
                    continue
                ww = w[(nu, rho)]

                def br(b, ww=ww, lag=lag, xl=xl):
                    acc = -c.star(lag, ww[b])
                    for k in range(d):
                        acc = acc + c.T(xl[k], c.Xt(b, ww[k]))
                    return acc
                comp = _frame_current(cfg, br, 0.5)
                for mu in range(d):
                    H[name][(mu, nu, rho)] = H[name][(mu, nu, rho)] + comp[mu]
    dphi_einv = [c.star(cfg.dphi[r], einv) for r in range(d)]
    dphia_einv = [[c.star(cfg.dphia[k][r], einv) for r in range(d)] for k in range(d)]
    for nu in range(d):
        for rho in range(d):
            if nu == rho:
                continue

            def bk(b, nu=nu, rho=rho):
                acc = -c.T(cfg.dphi[nu], 0.5 * c.Xt(b, cfg.brace_dphi_einv[rho]))
                if not simplified:
                    acc = acc + c.S(cfg.dphi[nu], c.Xt(b, dphi_einv[rho]))
                return acc

            def bt(b, nu=nu, rho=rho):
                acc = zero
                for k in range(d):
                    acc = acc - c.T(cfg.dphia[k][nu], 0.5 * c.Xt(b, cfg.brace_dphia_einv[k][rho]))
                    if not simplified:
                        acc = acc + c.S(cfg.dphia[k][nu], c.Xt(b, dphia_einv[k][rho]))
                return acc
            kin = _frame_current(cfg, bk, 0.5)
            twk = _frame_current(cfg, bt, 0.5)
            for mu in range(d):
                lead = 0.25 * e * xs[nu] * cfg.dphi[rho] * cfg.brace_dphi_einv[mu]
                H["kinetic"][(mu, nu, rho)] = H["kinetic"][(mu, nu, rho)] + lead + kin[mu]
                lt = zero
                for k in range(d):
                    lt = lt + xs[nu] * cfg.dphia[k][rho] * cfg.brace_dphia_einv[k][mu]
                H["twist_kinetic"][(mu, nu, rho)] = H["twist_kinetic"][(mu, nu, rho)] + 0.25 * e * lt + twk[mu]
    if p.omega_sq:
        inv = _theta_inv(cfg)
        xt = cfg.xt
        outer = [c.anti(phi, nest) for nest in cfg.harmonic_nest]
        s3 = [c.anti(phi, c.star(xt[g], phi)) for g in range(d)]
        for nu in range(d):
            for rho in range(d):
                if nu == rho:
                    continue
                x_phi_einv = c.multi([xs[rho], phi, einv])
                x_einv = c.star(xs[rho], einv)

                def bh(b, nu=nu, rho=rho, x_phi_einv=x_phi_einv, x_einv=x_einv):
                    acc = zero
                    for g in range(d):
                        if inv[g, nu] == 0:
                            continue
                        term = c.T(xs[rho], c.Xt(b, outer[g]))
                        if not simplified:
                            # the last bracket reads {x~^gamma, phi}
                            x_br = c.multi([xs[rho], cfg.brace_xt_phi[g], einv])
                            term = term + 2.0 * c.S(cfg.brace_xt_phi[g], c.Xt(b, x_phi_einv))
                            term = term + 2.0 * c.S(s3[g], c.Xt(b, x_einv))
                            term = term + 2.0 * c.S(phi, c.Xt(b, x_br))
                        acc = acc + inv[g, nu] * term
                    return acc
                comp = _frame_current(cfg, bh, -0.5 * p.omega_sq / 4.0)
                for mu in range(d):
                    H["harmonic"][(mu, nu, rho)] = H["harmonic"][(mu, nu, rho)] + comp[mu]
    out = {}
    for name in PIECES:
        comps = {}
        for mu, nu, rho in np.ndindex(d, d, d):
            comps[(mu, nu, rho)] = H[name][(mu, nu, rho)] - H[name][(mu, rho, nu)]
        out[name] = TensorField(cfg.grid, 3, comps, labels=("mu", "nu", "rho"), antisymmetric=((1, 2),))
    return out


def amt(cfg: Configuration) -> TensorField:
    return _sum_pieces(amt_pieces(cfg))


def amt_simplified(cfg: Configuration) -> TensorField:
    return _sum_pieces(amt_pieces(cfg, simplified=True))


# dilatation ---------------------------------------------------------------

def dc_pieces(cfg: Configuration, simplified: bool = False) -> dict[str, TensorField]:
    c, p, d, e, einv = cfg.calc, cfg.params, cfg.dim, cfg.e, cfg.einv
    xs = coordinates(cfg)
    out = {}
    for name in PIECES:
        lag = cfg.pieces[name]
        dens = c.star(lag, einv) * e
        out[name] = [-2.0 * xs[mu] * dens for mu in range(d)]
    if p.omega_sq:
        if simplified:
            outer = [c.anti(cfg.phi, nest) for nest in cfg.harmonic_nest]

            def br(b):
                acc = cfg.grid.zeros()
                for mu in range(d):
                    acc = acc + c.T(cfg.xt[mu], c.Xt(b, outer[mu]))
                return acc
            extra = _frame_current(cfg, br, -p.omega_sq)
        else:
            extra = _comps(R_current(cfg, [-2.0 * x for x in cfg.xt]))
        out["harmonic"] = _add(out["harmonic"], extra)
    return {name: _vec(v, "mu") for name, v in out.items()}


def dilatation_current(cfg: Configuration) -> TensorField:
    return _sum_pieces(dc_pieces(cfg))


def dc_simplified(cfg: Configuration) -> TensorField:
    return _sum_pieces(dc_pieces(cfg, simplified=True))


# integrated divergences ---------------------------------------------------------

def integrated_divergence(t: TensorField) -> dict:
    """Signed masked integral of the divergence per free index."""
    div = divergence(t)
    return {idx: integrate(div[idx]) for idx in div.indices()}


def simplified_gap(cfg: Configuration, which: str) -> dict:
    """Integrated divergence of full minus simplified form, with a scale."""
    full, simp = {
        "emt": (emt, emt_simplified),
        "amt": (amt, amt_simplified),
        "dc": (dilatation_current, dc_simplified),
    }[which]
    a, b = full(cfg), simp(cfg)
    diff = divergence(a - b)
    gap = max(abs(integrate(diff[idx])) for idx in diff.indices())
    scale = max(integrate_abs(divergence(a)[idx]) for idx in diff.indices())
    return {"gap": gap, "scale": max(scale, 1e-300), "pointwise": diff.norm()}


# Noether bookkeeping --------------------------------------------------------

@dataclass
class VariationSpec:
    kind: str  # translation | rotation | parity
    direction: tuple[int, ...] = (0,)
    eps: float = 1e-4

    def __post_init__(self) -> None:
        if self.kind not in ("translation", "rotation", "parity"):
            raise ValueError(f"unknown variation {self.kind!r}")


def _flow(cfg: Configuration, spec: VariationSpec) -> list[ScalarField]:
    """Vector field ``eps^nu(x)`` of the variation (unit amplitude)."""
    d = cfg.dim
    g = cfg.grid
    if spec.kind == "translation":
        nu = spec.direction[0]
        return [g.constant(1.0 if k == nu else 0.0) for k in range(d)]
    nu, rho = spec.direction
    xs = coordinates(cfg)
    vec = [g.zeros() for _ in range(d)]
    # eps^nu = omega^{nu rho} x_rho with omega^{nu rho} = 1 = -omega^{rho nu}
    vec[nu] = xs[rho]
    vec[rho] = -1.0 * xs[nu]
    return vec


def _transported(cfg: Configuration, flow: list[ScalarField], amp: float) -> Configuration:
    from .geometry import build_vielbein
    from .star import StarConfig

    def move(f):
        out = f
        for k in range(cfg.dim):
            out = out - amp * flow[k] * cfg.d(f, k)
        return out
    phi = move(cfg.phi)
    phia = [move(p) for p in cfg.vielbein.phi_a]
    v = build_vielbein(phia, cfg.stencil)
    sc = cfg.star_cfg.with_(vielbein=v)
    return Configuration(phi, v, cfg.params, sc, cfg.xt_mode, cfg.xtilde)


def parity_map(cfg: Configuration) -> Configuration:
    """``phi(x) -> phi(-x)``, ``phi^a(x) -> -phi^a(-x)`` on a symmetric grid."""
    from .geometry import build_vielbein

    phi = cfg.phi.mirrored()
    phia = [-1.0 * p.mirrored() for p in cfg.vielbein.phi_a]
    v = build_vielbein(phia, cfg.stencil)
    sc = cfg.star_cfg.with_(vielbein=v)
    return Configuration(phi, v, cfg.params, sc, cfg.xt_mode, cfg.xtilde)


def vacuum_of(cfg: Configuration) -> Configuration:
    from .geometry import identity_vielbein

    v = identity_vielbein(cfg.grid, cfg.stencil)
    sc = cfg.star_cfg.with_(vielbein=v)
    return Configuration(cfg.grid.zeros(), v, cfg.params, sc, cfg.xt_mode)


@dataclass
class BookkeepingResult:
    kind: str
    direct: float
    current: float
    reference: float
    defect: float
    parts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "direct": self.direct, "current": self.current,
                "reference": self.reference, "defect": self.defect, "parts": self.parts}


def noether_bookkeeping(cfg: Configuration, spec: VariationSpec) -> BookkeepingResult:
    """Compare the action change two ways.

    (a) central difference of the action density under the linearised
        variation ``phi -> phi - eps^nu d_nu phi`` (same for ``phi^c``),
        integrated after differencing; for parity the finite difference
        ``S[P cfg] - S[cfg]``.
    (b) explicit-breaking source ``int dx~ . C`` plus the integrated
        divergence of the current (EMT for translations, AMT for rotations,
        vacuum-subtracted DC for parity).
    """
    d = cfg.dim
    if spec.kind == "parity":
        rho_p = parity_map(cfg).density
        direct = integrate(rho_p - cfg.density).real
        dc = dilatation_current(cfg) - dilatation_current(vacuum_of(cfg))
        flux = integrate(divergence(dc)[()]).real
        reference = abs(integrate(cfg.density - vacuum_of(cfg).density))
        current = flux
        parts = {"dc_flux": flux}
    else:
        flow = _flow(cfg, spec)
        plus = _transported(cfg, flow, spec.eps)
        minus = _transported(cfg, flow, -spec.eps)
        drho = (plus.density - minus.density) * (1.0 / (2.0 * spec.eps))
        direct = integrate(drho).real
        inv = _theta_inv(cfg)
        # dx~_mu = 2 (Theta^-1)_{mu nu} eps^nu(x)
        dxt = [sum((2.0 * inv[mu, nu] * flow[nu] for nu in range(d)), cfg.grid.zeros()) for mu in range(d)]
        cons = constraint_residual(cfg)
        src_field = sum((dxt[mu] * cons[mu] for mu in range(d)), cfg.grid.zeros())
        source = integrate(src_field).real
        if spec.kind == "translation":
            nu = spec.direction[0]
            flux = integrate(divergence(emt(cfg))[(nu,)]).real
        else:
            nu, rho = spec.direction
            flux = integrate(divergence(amt(cfg))[(nu, rho)]).real
        current = source + flux
        reference = max(abs(integrate(abs_field(drho))), abs(integrate(abs_field(src_field))))
        parts = {"source": source, "flux": flux}
    # rounding noise of the differenced action, relative to its magnitude
    noise = NOISE_FACTOR * np.finfo(float).eps * integrate_abs(cfg.density)
    if spec.kind != "parity":
        noise /= spec.eps
    parts["noise_floor"] = noise
    if max(abs(direct), abs(current)) <= noise:
        # both routes vanish to rounding: nothing left to compare
        return BookkeepingResult(spec.kind, direct, current, reference, 0.0, parts)
    scale = max(abs(direct), abs(current), reference, 1e-300)
    return BookkeepingResult(spec.kind, direct, current, reference, abs(direct - current) / scale, parts)


def abs_field(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, np.abs(f.values), check=False)


def noether_bookkeeping_defect(cfg: Configuration, spec: VariationSpec) -> float:
    return noether_bookkeeping(cfg, spec).defect


# conservation report -----------------------------------------------------------

@dataclass
class CurrentSummary:
    name: str
    raw: dict
    compensated: dict
    breakdown: dict
    closure: float

    def to_dict(self) -> dict:
        return {"name": self.name, "raw": self.raw, "compensated": self.compensated,
                "breakdown": self.breakdown, "closure": self.closure}


@dataclass
class ConservationReport:
    currents: dict
    emt_symmetry_defect: float
    params: dict

    def to_dict(self) -> dict:
        return {"params": self.params, "emt_symmetry_defect": self.emt_symmetry_defect,
                "currents": {k: v.to_dict() for k, v in self.currents.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"EMT symmetry defect  {self.emt_symmetry_defect:.3e}"]
        for name, cur in self.currents.items():
            lines.append(f"{name}: closure {cur.closure:.2e}")
            lines.append(f"  {'index':<10}{'raw':>14}{'compensated':>14}")
            for idx in cur.raw:
                comp = cur.compensated.get(idx, float('nan'))
                lines.append(f"  {idx:<10}{cur.raw[idx]:>14.4e}{comp:>14.4e}")
            lines.append(f"  {'piece':<14}{'raw':>14}{'compensated':>14}")
            for piece, vals in cur.breakdown.items():
                lines.append(f"  {piece:<14}{vals['raw']:>14.4e}{vals['compensated']:>14.4e}")
        return "\n".join(lines)


def _key(idx: tuple) -> str:
    return ",".join(str(i) for i in idx) if idx else "-"


def _summarise(name: str, pieces: dict[str, TensorField], comp: dict[str, TensorField] | None) -> CurrentSummary:
    divs = {k: divergence(t) for k, t in pieces.items()}
    total = _sum_pieces(divs)
    idxs = list(total.indices())
    comp_total = _sum_pieces(comp) if comp else None
    raw = {_key(i): integrate_abs(total[i]) for i in idxs}
    compensated = {}
    if comp_total is not None:
        compensated = {_key(i): integrate_abs(total[i] - comp_total[i]) for i in idxs}
    breakdown = {}
    for k, dv in divs.items():
        r = sum(integrate_abs(dv[i]) for i in idxs)
        cval = r
        if comp is not None:
            cval = sum(integrate_abs(dv[i] - comp[k][i]) for i in idxs)
        breakdown[k] = {"raw": r, "compensated": cval}
    closure_num = max(field_norm(sum((dv[i] for dv in divs.values()), total.grid.zeros()) - total[i]) for i in idxs)
    closure = closure_num / max(total.norm(), 1e-300)
    return CurrentSummary(name, raw, compensated, breakdown, closure)


def _el_compensation(cfg: Configuration, kind: str) -> dict[str, TensorField]:
    """Euler-Lagrange part of the divergence, per piece.

    EMT: ``d_nu phi E_phi + d_nu phi^c E_(phi,phi^c)``. AMT: the same with
    ``d_nu`` replaced by ``-(1/2) x_[nu d_rho]``.
    """
    d = cfg.dim
    xs = coordinates(cfg)
    mixed = [e_mixed_pieces(cfg, k) for k in range(d)]
    out = {}
    for name, ep in e_phi_pieces(cfg).items():
        def gen(nu: int) -> ScalarField:
            acc = cfg.dphi[nu] * ep
            for k in range(d):
                acc = acc + cfg.dphia[k][nu] * mixed[k][name]
            return acc
        if kind == "emt":
            comps = {(nu,): gen(nu) for nu in range(d)}
            out[name] = TensorField(cfg.grid, 1, comps)
        else:
            comps = {}
            for nu, rho in np.ndindex(d, d):
                acc = xs[nu] * cfg.dphi[rho] - xs[rho] * cfg.dphi[nu]
                acc = acc * ep
                for k in range(d):
                    acc = acc + (xs[nu] * cfg.dphia[k][rho] - xs[rho] * cfg.dphia[k][nu]) * mixed[k][name]
                comps[(nu, rho)] = -0.5 * acc
            out[name] = TensorField(cfg.grid, 2, comps)
    return out


def conservation_report(cfg: Configuration) -> ConservationReport:
    d = cfg.dim
    ep = emt_pieces(cfg)
    ap = amt_pieces(cfg)
    dp = dc_pieces(cfg)
    vac = vacuum_of(cfg)
    dvac = dilatation_current(vac)
    dp = dict(dp)
    dp["twist_kinetic"] = dp["twist_kinetic"] - dvac
    currents = {
        "emt": _summarise("emt", ep, _el_compensation(cfg, "emt")),
        "amt": _summarise("amt", ap, _el_compensation(cfg, "amt")),
        "dc": _summarise("dc", dp, None),
    }
    t = _sum_pieces(ep)
    sym = 0.0
    for mu in range(d):
        for nu in range(d):
            sym = max(sym, field_norm(t[(mu, nu)] - t[(nu, mu)]))
    p = cfg.params
    return ConservationReport(currents, sym, {"mass_sq": p.mass_sq, "lam": p.lam, "omega_sq": p.omega_sq})
