"""Truncated twisted star product and its operator calculus.

``Delta^n(f, g) = (i/2)^n Theta^{a1 b1} ... Theta^{an bn} (X_{a1..an} f)(X_{b1..bn} g)``
with commuting frame vector fields ``X_a``. The product keeps ``Delta^n`` for
``n <= N``. The operator series ``T``, ``S`` and ``R`` are always applied to a
pair ``(f, X~^a g)``; ``X~`` carries one power of ``Theta``, so they keep
operator powers up to ``max(N - 1, 0)`` and every expression stops at the same
total power ``N`` as the product. At that matched truncation the identities

    f*g - fg      = X_a T(f, X~^a g)
    [f, g]_*      = 2 X_a S(f, X~^a g)
    {f, g}_*      = 2 fg + 2 X_a R(f, X~^a g)

hold order by order, not just asymptotically, for ``N >= 1`` once the outer
``X_a`` is distributed onto the jets (``StarCalculus.total_X_jet``). The
antisymmetry relations ``T(f, X~g) - T(g, X~f) = 2 S(f, X~g)`` and
``S(f, X~g) = -S(g, X~f)`` hold after that contraction, not per component.

Cost per product: with ``k`` nonzero entries of ``Theta`` the order-``n`` term
touches ``O(k^n)`` coefficient pairs, and each operand needs
``C(n + D - 1, D - 1)`` distinct derivative jets per order:

    =====  ===========  ===========
    N      jets (D=2)   jets (D=4)
    =====  ===========  ===========
    2      6            15
    4      15           70
    6      28           210
    =====  ===========  ===========
"""
from __future__ import annotations

import itertools
import json
import math
import weakref
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import ThetaMatrix, Vielbein, X_apply, xtilde_coords
from .grid import ScalarField, StencilSpec, field_norm
from .tensor import TensorField


@dataclass(frozen=True, eq=False)
class StarConfig:
    theta: ThetaMatrix
    vielbein: Vielbein
    N: int = 4
    theta_scale: float = 1.0
    commutative: bool = False
    _calc: "StarCalculus" = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if self.N < 0:
            raise ValueError("truncation order must be non-negative")
        if self.theta.dim != self.vielbein.dim:
            raise ValueError("theta and vielbein dimensions differ")
        if self.theta_scale == 0 and not self.commutative:
            raise ValueError("theta_scale=0 is only reachable through commutative mode")
        object.__setattr__(self, "_calc", StarCalculus(self))

    @property
    def grid(self):
        return self.vielbein.grid

    @property
    def stencil(self) -> StencilSpec:
        return self.vielbein.stencil

    @property
    def operator_order(self) -> int:
        return max(self.N - 1, 0)

    @property
    def effective_scale(self) -> float:
        return 0.0 if self.commutative else self.theta_scale

    def with_(self, **changes) -> "StarConfig":
        kw = dict(theta=self.theta, vielbein=self.vielbein, N=self.N,
                  theta_scale=self.theta_scale, commutative=self.commutative)
        kw.update(changes)
        return StarConfig(**kw)

    @property
    def calc(self) -> "StarCalculus":
        return self._calc


@lru_cache(maxsize=128)
def _pair_coefficients(theta_key: tuple, dim: int, n: int) -> tuple:
    """Collapse ordered index tuples to sorted multi-indices.

    Returns ``((A, B, c), ...)`` with ``c = sum prod Theta^{a_i b_i}`` over all
    ordered tuples whose sorted forms are ``A`` and ``B``.
    """
    theta = np.array(theta_key).reshape(dim, dim)
    rows = [[(b, theta[a, b]) for b in range(dim) if theta[a, b] != 0] for a in range(dim)]
    acc: dict[tuple, float] = defaultdict(float)
    for a_tuple in itertools.product(range(dim), repeat=n):
        for choice in itertools.product(*(rows[a] for a in a_tuple)):
            coeff = 1.0
            for _, t in choice:
                coeff *= t
            acc[(tuple(sorted(a_tuple)), tuple(sorted(b for b, _ in choice)))] += coeff
    return tuple((a, b, c) for (a, b), c in sorted(acc.items()) if c != 0)


class StarCalculus:
    """Evaluator bound to one :class:`StarConfig`.

    Derivative jets ``X_A f`` are memoised per field object (weakly) and per
    sorted multi-index ``A``; they are built as ``X_{A[0]} (X_{A[1:]} f)``.
    """

    def __init__(self, cfg: StarConfig):
        self.cfg = cfg
        self._jets: "weakref.WeakKeyDictionary[ScalarField, dict]" = weakref.WeakKeyDictionary()
        self._xt = None

    # jets -----------------------------------------------------------------
    def X(self, a: int, f: ScalarField) -> ScalarField:
        return self.jet(f, (a,))

    def jet(self, f: ScalarField, multi: tuple[int, ...]) -> ScalarField:
        if not multi:
            return f
        cache = self._jets.get(f)
        if cache is None:
            cache = {}
            self._jets[f] = cache
        hit = cache.get(multi)
        if hit is None:
            hit = X_apply(self.cfg.vielbein, multi[0], self.jet(f, multi[1:]))
            cache[multi] = hit
        return hit

    def Xt(self, a: int, f: ScalarField) -> ScalarField:
        """``X~^a f = (i/2) s Theta^{ab} X_b f``."""
        s = self.cfg.effective_scale
        out = f.grid.zeros()
        if s == 0:
            return out
        for b in range(self.cfg.theta.dim):
            t = self.cfg.theta.entries[a, b]
            if t != 0:
                out = out + (0.5j * s * t) * self.X(b, f)
        return out

    # Delta powers ---------------------------------------------------------
    def delta_pow(self, f: ScalarField, g: ScalarField, n: int) -> ScalarField:
        if f.grid != g.grid:
            raise ValueError("fields live on different grids")
        if n == 0:
            return f * g
        s = self.cfg.effective_scale
        if s == 0:
            return f.grid.zeros()
        theta = self.cfg.theta
        key = tuple(theta.entries.reshape(-1).tolist())
        out = np.zeros(f.grid.shape, dtype=complex)
        for a_multi, b_multi, c in _pair_coefficients(key, theta.dim, n):
            out += c * (self.jet(f, a_multi).values * self.jet(g, b_multi).values)
        return ScalarField(f.grid, out * (0.5j * s) ** n, check=False)

    def _series(self, f, g, coeffs: dict[int, float]) -> ScalarField:
        out = f.grid.zeros()
        for n in sorted(coeffs):
            c = coeffs[n]
            if c:
                out = out + c * self.delta_pow(f, g, n)
        return out

    def star(self, f: ScalarField, g: ScalarField, order: int | None = None) -> ScalarField:
        N = self.cfg.N if order is None else order
        return self._series(f, g, {n: 1.0 / math.factorial(n) for n in range(N + 1)})

    def T(self, f, g, order: int | None = None) -> ScalarField:
        return self._series(f, g, self.series_coefficients("T", order))

    def S(self, f, g, order: int | None = None) -> ScalarField:
        return self._series(f, g, self.series_coefficients("S", order))

    def R(self, f, g, order: int | None = None) -> ScalarField:
        return self._series(f, g, self.series_coefficients("R", order))

    def comm(self, f, g) -> ScalarField:
        return self.star(f, g) - self.star(g, f)

    def anti(self, f, g) -> ScalarField:
        return self.star(f, g) + self.star(g, f)

    def multi(self, fs: Sequence[ScalarField]) -> ScalarField:
        if not fs:
            raise ValueError("empty product")
        out = fs[0]
        for f in fs[1:]:
            out = self.star(out, f)
        return out

    def total_X(self, op, f, g) -> ScalarField:
        """``sum_a X_a op(f, X~^a g)`` for an operator series ``op``, stencil on the assembled product."""
        out = f.grid.zeros()
        for a in range(self.cfg.theta.dim):
            out = out + self.X(a, op(f, self.Xt(a, g)))
        return out

    def series_coefficients(self, kind: str, order: int | None = None) -> dict[int, float]:
        K = self.cfg.operator_order if order is None else order
        if kind == "T":
            return {n: 1.0 / math.factorial(n + 1) for n in range(K + 1)}
        if kind == "S":
            return {n: 1.0 / math.factorial(n + 1) for n in range(0, K + 1, 2)}
        if kind == "R":
            return {n: 1.0 / math.factorial(n + 1) for n in range(1, K + 1, 2)}
        raise ValueError(f"unknown operator series {kind!r}")

    def total_X_jet(self, kind: str, f: ScalarField, g: ScalarField) -> ScalarField:
        """``sum_a X_a op(f, X~^a g)`` with the outer ``X_a`` distributed onto the jets.

        The outer derivative acts on each bilinear term by the Leibniz rule, so
        the result is built from the same sorted jets as ``Delta^{n+1}`` and
        the operator identities hold to rounding instead of to stencil error.
        """
        s = self.cfg.effective_scale
        out = np.zeros(f.grid.shape, dtype=complex)
        if s == 0:
            return ScalarField(f.grid, out, check=False)
        theta = self.cfg.theta
        d = theta.dim
        key = tuple(theta.entries.reshape(-1).tolist())
        outer = [(a, b, theta.entries[a, b]) for a in range(d) for b in range(d) if theta.entries[a, b] != 0]
        for n, c in sorted(self.series_coefficients(kind).items()):
            pref = c * (0.5j * s) ** (n + 1)
            for a_multi, b_multi, cc in _pair_coefficients(key, d, n):
                for a, b, t in outer:
                    left = self.jet(f, tuple(sorted(a_multi + (a,)))).values * self.jet(g, tuple(sorted(b_multi + (b,)))).values
                    right = self.jet(f, a_multi).values * self.jet(g, tuple(sorted(b_multi + (a, b)))).values
                    out += (pref * cc * t) * (left + right)
        return ScalarField(f.grid, out, check=False)

    # x~ helpers -------------------------------------------------------------
    @property
    def xtilde(self) -> list[ScalarField]:
        if self._xt is None:
            self._xt = xtilde_coords(self.cfg.theta, self.cfg.grid)
        return self._xt

    def brace_xtilde(self, f: ScalarField) -> TensorField:
        return TensorField.from_list([self.anti(xt, f) for xt in self.xtilde], labels=("mu",))

    def trace_terms(self, f, g) -> list[dict]:
        rows = []
        for n in range(self.cfg.N + 1):
            term = self.delta_pow(f, g, n) * (1.0 / math.factorial(n))
            rows.append({"order": n, "norm": field_norm(term)})
        return rows


# module-level functional surface --------------------------------------------

def delta_pow(cfg: StarConfig, f, g, n: int) -> ScalarField:
    return cfg.calc.delta_pow(f, g, n)


def star(cfg: StarConfig, f, g) -> ScalarField:
    return cfg.calc.star(f, g)


def star_multi(cfg: StarConfig, fs: Sequence[ScalarField]) -> ScalarField:
    return cfg.calc.multi(fs)


def star_commutator(cfg: StarConfig, f, g, cross_check: bool = False, tol: float = 1e-10) -> ScalarField:
    out = cfg.calc.comm(f, g)
    if cross_check:
        alt = 2.0 * cfg.calc.total_X_jet("S", f, g)
        _assert_close(out, alt, tol, "commutator")
    return out


def star_anticommutator(cfg: StarConfig, f, g, cross_check: bool = False, tol: float = 1e-10) -> ScalarField:
    out = cfg.calc.anti(f, g)
    if cross_check:
        alt = 2.0 * (f * g) + 2.0 * cfg.calc.total_X_jet("R", f, g)
        _assert_close(out, alt, tol, "anticommutator")
    return out


def _assert_close(a: ScalarField, b: ScalarField, tol: float, what: str) -> None:
    scale = max(field_norm(a), field_norm(b), 1e-300)
    err = field_norm(a - b)
    if err > tol * scale:
        raise ArithmeticError(f"{what} cross-check failed: defect {err:.3e} vs scale {scale:.3e}")


def T_apply(cfg: StarConfig, f, g, order: int | None = None) -> ScalarField:
    return cfg.calc.T(f, g, order)


def S_apply(cfg: StarConfig, f, g, order: int | None = None) -> ScalarField:
    return cfg.calc.S(f, g, order)


def R_apply(cfg: StarConfig, f, g, order: int | None = None) -> ScalarField:
    return cfg.calc.R(f, g, order)


def brace_xtilde(cfg: StarConfig, f) -> TensorField:
    return cfg.calc.brace_xtilde(f)


def contract_dot(a: TensorField, b: TensorField) -> ScalarField:
    if a.rank != 1 or b.rank != 1:
        raise ValueError("contract_dot expects rank-1 tensors")
    out = a.grid.zeros()
    for mu in range(a.grid.dim):
        out = out + a[mu] * b[mu]
    return out


def trace_dump(cfg: StarConfig, f, g) -> str:
    """JSON listing of each series term's interior norm for ``f * g``."""
    payload = {"N": cfg.N, "theta_scale": cfg.effective_scale, "terms": cfg.calc.trace_terms(f, g)}
    return json.dumps(payload, indent=2)
