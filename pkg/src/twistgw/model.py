"""The twisted GW model on a sampled configuration.

Indices are Euclidean, so ``phi_a = phi^a`` and ``d^mu = d_mu``. Every nested
bracket ``{x~, {e^-1, {x~, phi}}}`` is evaluated innermost-out and the two
``x~`` factors are contracted over ``mu``.

``x~ phi`` inside the harmonic term is the symmetrised product
``(1/2){x~_mu, phi}_*`` by default (``xt_mode="symmetrized"``). With the trivial
twist this equals the pointwise product ``x~_mu phi`` exactly; for a general
twist it is the form whose functional derivative is the harmonic term of
``E_phi`` at finite truncation. ``xt_mode="pointwise"`` selects the literal
pointwise product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .geometry import Vielbein
from .grid import ScalarField, field_norm, integrate, partial
from .star import StarConfig

PIECES = ("kinetic", "twist_kinetic", "mass", "quartic", "harmonic")
XT_MODES = ("symmetrized", "pointwise")


@dataclass(frozen=True)
class GWParams:
    mass_sq: float = 0.0
    lam: float = 0.0
    omega_sq: float = 0.0
    exploratory: bool = False

    def __post_init__(self) -> None:
        if not self.exploratory and (self.lam < 0 or self.omega_sq < 0):
            raise ValueError("negative lambda or Omega^2 needs exploratory=True")

    def with_(self, **changes) -> "GWParams":
        kw = dict(mass_sq=self.mass_sq, lam=self.lam, omega_sq=self.omega_sq, exploratory=self.exploratory)
        kw.update(changes)
        return GWParams(**kw)


@dataclass(eq=False)
class Configuration:
    phi: ScalarField
    vielbein: Vielbein
    params: GWParams
    star_cfg: StarConfig
    xt_mode: str = "symmetrized"
    xtilde: list | None = None

    def __post_init__(self) -> None:
        if self.xt_mode not in XT_MODES:
            raise ValueError(f"xt_mode must be one of {XT_MODES}")
        if self.star_cfg.vielbein is not self.vielbein:
            raise ValueError("star configuration uses a different vielbein")
        if self.phi.grid != self.vielbein.grid:
            raise ValueError("phi and vielbein live on different grids")

    # shorthands ----------------------------------------------------------
    @property
    def grid(self):
        return self.phi.grid

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def calc(self):
        return self.star_cfg.calc

    @property
    def e(self) -> ScalarField:
        return self.vielbein.det

    @property
    def einv(self) -> ScalarField:
        return self.vielbein.inv_det

    @property
    def stencil(self):
        return self.star_cfg.stencil

    def d(self, f: ScalarField, mu: int) -> ScalarField:
        return partial(f, mu, self.stencil)

    def with_(self, **changes) -> "Configuration":
        kw = dict(phi=self.phi, vielbein=self.vielbein, params=self.params,
                  star_cfg=self.star_cfg, xt_mode=self.xt_mode, xtilde=self.xtilde)
        kw.update(changes)
        return Configuration(**kw)

    def with_phi(self, phi: ScalarField) -> "Configuration":
        return self.with_(phi=phi)

    # cached building blocks ---------------------------------------------------
    @cached_property
    def dphi(self) -> list[ScalarField]:
        return [self.d(self.phi, mu) for mu in range(self.dim)]

    @cached_property
    def dphia(self) -> list[list[ScalarField]]:
        """``dphia[a][mu] = d_mu phi^a``."""
        v = self.vielbein
        return [[v.e_frame(a, mu) for mu in range(self.dim)] for a in range(self.dim)]

    @cached_property
    def xt(self) -> list[ScalarField]:
        """``x~_mu``; an explicit override is used by the x~-variation checks."""
        return list(self.xtilde) if self.xtilde is not None else self.calc.xtilde

    @cached_property
    def brace_xt_phi(self) -> list[ScalarField]:
        """``{x~_mu, phi}_*`` per component."""
        return [self.calc.anti(x, self.phi) for x in self.xt]

    @cached_property
    def xt_phi(self) -> list[ScalarField]:
        """``(x~ phi)_mu`` in the configured product mode."""
        if self.xt_mode == "symmetrized":
            return [0.5 * b for b in self.brace_xt_phi]
        return [x * self.phi for x in self.xt]

    @cached_property
    def phi2(self) -> ScalarField:
        return self.calc.star(self.phi, self.phi)

    @cached_property
    def phi3(self) -> ScalarField:
        return self.calc.star(self.phi2, self.phi)

    def xt_dot(self, mu: int, f: ScalarField) -> ScalarField:
        """``x~_mu`` applied to ``f`` in the configured product mode."""
        if self.xt_mode == "symmetrized":
            return 0.5 * self.calc.anti(self.xt[mu], f)
        return self.xt[mu] * f

    @cached_property
    def pieces(self) -> dict[str, ScalarField]:
        c, p, d = self.calc, self.params, self.dim
        g = self.grid
        kin = g.zeros()
        for mu in range(d):
            kin = kin + c.star(self.dphi[mu], self.dphi[mu])
        tw = g.zeros()
        for a in range(d):
            for mu in range(d):
                tw = tw + c.star(self.dphia[a][mu], self.dphia[a][mu])
        harm = g.zeros()
        if p.omega_sq:
            for mu in range(d):
                harm = harm + c.star(self.xt_phi[mu], self.xt_phi[mu])
        quart = c.star(self.phi3, self.phi) if p.lam else g.zeros()
        return {
            "kinetic": 0.5 * kin,
            "twist_kinetic": 0.5 * tw,
            "mass": (0.5 * p.mass_sq) * self.phi2,
            "quartic": (p.lam / 24.0) * quart,
            "harmonic": (0.5 * p.omega_sq) * harm,
        }

    @cached_property
    def lagrangian(self) -> ScalarField:
        out = self.grid.zeros()
        for name in PIECES:
            out = out + self.pieces[name]
        return out

    @cached_property
    def density(self) -> ScalarField:
        """``(L * e^-1) e``, the integrand of the action."""
        return self.calc.star(self.lagrangian, self.einv) * self.e

    @cached_property
    def brace_dphi_einv(self) -> list[ScalarField]:
        return [self.calc.anti(df, self.einv) for df in self.dphi]

    @cached_property
    def brace_dphia_einv(self) -> list[list[ScalarField]]:
        return [[self.calc.anti(df, self.einv) for df in row] for row in self.dphia]

    @cached_property
    def brace_phi_einv(self) -> ScalarField:
        return self.calc.anti(self.phi, self.einv)

    @cached_property
    def quartic_brace(self) -> ScalarField:
        """``{phi*phi, {phi, e^-1}}_*``."""
        return self.calc.anti(self.phi2, self.brace_phi_einv)

    @cached_property
    def harmonic_nest(self) -> list[ScalarField]:
        """``{e^-1, {x~_mu, phi}}_*`` per component."""
        return [self.calc.anti(self.einv, b) for b in self.brace_xt_phi]

    @cached_property
    def harmonic_brace(self) -> ScalarField:
        """``sum_mu {x~_mu, {e^-1, {x~_mu, phi}}}_*``."""
        out = self.grid.zeros()
        for mu in range(self.dim):
            out = out + self.calc.anti(self.xt[mu], self.harmonic_nest[mu])
        return out

    @cached_property
    def kinetic_flux(self) -> ScalarField:
        """``sum_mu d_mu (e {d_mu phi, e^-1}_*)``."""
        out = self.grid.zeros()
        for mu in range(self.dim):
            out = out + self.d(self.e * self.brace_dphi_einv[mu], mu)
        return out


def lagrangian_piece(cfg: Configuration, which: str) -> ScalarField:
    if which not in PIECES:
        raise ValueError(f"unknown Lagrangian piece {which!r}; expected one of {PIECES}")
    return cfg.pieces[which]


def action_density(cfg: Configuration) -> ScalarField:
    return cfg.density


def action_value(cfg: Configuration) -> complex:
    """``int e (L * e^-1)`` over the interior; the imaginary part is kept for reporting."""
    return integrate(cfg.calc.star(cfg.lagrangian, cfg.einv), weight=cfg.e)


def e_phi_pieces(cfg: Configuration) -> dict[str, ScalarField]:
    """Contributions to ``E_phi`` tagged by the Lagrangian piece they come from."""
    p, e = cfg.params, cfg.e
    g = cfg.grid
    return {
        "kinetic": -0.5 * cfg.kinetic_flux,
        "twist_kinetic": g.zeros(),
        "mass": (0.5 * p.mass_sq) * e * cfg.brace_phi_einv,
        "quartic": (p.lam / 24.0) * e * cfg.quartic_brace if p.lam else g.zeros(),
        "harmonic": (p.omega_sq / 8.0) * e * cfg.harmonic_brace if p.omega_sq else g.zeros(),
    }


def e_phi_residual(cfg: Configuration) -> ScalarField:
    out = cfg.grid.zeros()
    for v in e_phi_pieces(cfg).values():
        out = out + v
    return out


def _xt_frame_derivative(cfg: Configuration, c: int, mu: int) -> ScalarField:
    """``X_c x~_mu = 2 (Theta^-1)_{mu nu} e_c^nu``."""
    inv = cfg.star_cfg.theta.inverse
    v = cfg.vielbein
    out = cfg.grid.zeros()
    for nu in range(cfg.dim):
        if inv[mu, nu] != 0:
            out = out + (2.0 * inv[mu, nu]) * v.e_inv(nu, c)
    return out


def _harmonic_dot(cfg: Configuration, weights: Callable[[int], ScalarField]) -> ScalarField:
    """``sum_mu w_mu {(x~ phi)_mu, e^-1}_*`` for pointwise weights ``w``."""
    out = cfg.grid.zeros()
    for mu in range(cfg.dim):
        out = out + weights(mu) * cfg.calc.anti(cfg.xt_phi[mu], cfg.einv)
    return out


def _twist_terms(cfg: Configuration, c: int, parts: str = "both") -> ScalarField:
    """``(e/2) X_c d phi . {d phi, e^-1} + (e/2) X_c d phi_a . {d phi^a, e^-1}``.

    ``parts`` selects the ``phi`` half, the ``phi^a`` half or both.
    """
    calc, d = cfg.calc, cfg.dim
    out = cfg.grid.zeros()
    for mu in range(d):
        if parts in ("both", "phi"):
            out = out + calc.X(c, cfg.dphi[mu]) * cfg.brace_dphi_einv[mu]
        if parts in ("both", "twist"):
            for a in range(d):
                out = out + calc.X(c, cfg.dphia[a][mu]) * cfg.brace_dphia_einv[a][mu]
    return 0.5 * cfg.e * out


def _twist_flux(cfg: Configuration, c: int) -> ScalarField:
    """``sum_mu d_mu ((e/2) {d_mu phi_c, e^-1}_*)``."""
    out = cfg.grid.zeros()
    for mu in range(cfg.dim):
        out = out + cfg.d(0.5 * cfg.e * cfg.brace_dphia_einv[c][mu], mu)
    return out


def e_phic_residual(cfg: Configuration, c: int) -> ScalarField:
    """Twist-field equation ``E_{phi^c}`` for frame index ``c``."""
    calc, p = cfg.calc, cfg.params
    xc_phi = calc.X(c, cfg.phi)
    out = -calc.X(c, cfg.lagrangian)
    out = out + 0.5 * xc_phi * cfg.kinetic_flux
    if p.omega_sq:
        out = out + (0.5 * p.omega_sq) * cfg.e * cfg.phi * _harmonic_dot(cfg, lambda mu: _xt_frame_derivative(cfg, c, mu))
    out = out + _twist_terms(cfg, c)
    out = out + _twist_flux(cfg, c)
    return out


def e_mixed_pieces(cfg: Configuration, c: int) -> dict[str, ScalarField]:
    """``E_(phi,phi^c)`` from its direct phi^c-variation form, split by Lagrangian piece."""
    calc, p, e = cfg.calc, cfg.params, cfg.e
    g = cfg.grid
    xc_phi = calc.X(c, cfg.phi)
    pieces = cfg.pieces
    out = {name: calc.X(c, pieces[name]) for name in PIECES}
    out["kinetic"] = out["kinetic"] - _twist_terms(cfg, c, "phi")
    out["twist_kinetic"] = out["twist_kinetic"] - _twist_terms(cfg, c, "twist") - _twist_flux(cfg, c)
    out["mass"] = out["mass"] - (0.5 * p.mass_sq) * e * xc_phi * cfg.brace_phi_einv
    if p.lam:
        out["quartic"] = out["quartic"] - (p.lam / 24.0) * e * xc_phi * cfg.quartic_brace
    if p.omega_sq:
        dot = g.zeros()
        for mu in range(cfg.dim):
            dot = dot + cfg.xt_dot(mu, calc.anti(cfg.xt_phi[mu], cfg.einv))
        out["harmonic"] = (out["harmonic"] - (0.5 * p.omega_sq) * e * xc_phi * dot
                           - (0.5 * p.omega_sq) * e * cfg.phi
                           * _harmonic_dot(cfg, lambda mu: _xt_frame_derivative(cfg, c, mu)))
    return out


def e_mixed_residual(cfg: Configuration, c: int) -> ScalarField:
    """``E_(phi,phi^c)`` assembled from its direct phi^c-variation form."""
    out = cfg.grid.zeros()
    for v in e_mixed_pieces(cfg, c).values():
        out = out + v
    return out


def onshell_decomposition_defect(cfg: Configuration, c: int) -> float:
    """Interior max of ``E_(phi,phi^c) + X_c phi E_phi + E_{phi^c}``."""
    total = e_mixed_residual(cfg, c) + cfg.calc.X(c, cfg.phi) * e_phi_residual(cfg) + e_phic_residual(cfg, c)
    return field_norm(total)


def decomposition_scale(cfg: Configuration, c: int) -> float:
    """Size of the largest of the three summands, used to normalise the defect."""
    return max(field_norm(e_mixed_residual(cfg, c)),
               field_norm(cfg.calc.X(c, cfg.phi) * e_phi_residual(cfg)),
               field_norm(e_phic_residual(cfg, c)), 1e-300)


def constraint_residual(cfg: Configuration) -> list[ScalarField]:
    """``e (Omega^2/8) {phi, {e^-1, {x~_mu, phi}}}_*`` per component ``mu``."""
    p = cfg.params
    if not p.omega_sq:
        return [cfg.grid.zeros() for _ in range(cfg.dim)]
    return [(p.omega_sq / 8.0) * cfg.e * cfg.calc.anti(cfg.phi, nest) for nest in cfg.harmonic_nest]
