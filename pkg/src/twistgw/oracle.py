"""Independent reference evaluators.

Nothing here imports the derivative, frame or series code of the main path.
Stencil weights come from a Vandermonde solve at a different accuracy order,
derivatives are applied by explicit slicing, and the star product is a plain
loop over ordered index tuples.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ORACLE_ORDER = 10


@dataclass
class OracleResult:
    values: np.ndarray
    method: str
    error_estimate: float = 0.0
    points: list = field(default_factory=list)

    METHODS = ("direct-multiindex", "analytic-commutative", "polynomial-closed-form")

    def __post_init__(self) -> None:
        if self.method not in self.METHODS:
            raise ValueError(f"unknown oracle method {self.method!r}")


def _weights(offsets: np.ndarray) -> np.ndarray:
    """First-derivative weights at 0 by solving the moment conditions."""
    k = len(offsets)
    vander = np.vander(offsets.astype(float), k, increasing=True).T
    rhs = np.zeros(k)
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs)


class SliceDerivative:
    """Order-``order`` first derivative on a uniform axis, applied by slicing."""

    def __init__(self, n: int, spacing: float, order: int = ORACLE_ORDER):
        self.n, self.h, self.order = n, spacing, order
        hw = order // 2
        self.central = _weights(np.arange(-hw, hw + 1))
        self.edge = {}
        for i in list(range(hw)) + list(range(n - hw, n)):
            start = min(max(i - hw, 0), n - order - 1)
            offs = np.arange(start, start + order + 1) - i
            self.edge[i] = (offs, _weights(offs))

    def __call__(self, arr: np.ndarray, axis: int) -> np.ndarray:
        hw = self.order // 2
        a = np.moveaxis(arr, axis, 0)
        out = np.zeros_like(a)
        n = self.n
        for k, w in zip(range(-hw, hw + 1), self.central):
            if w != 0.0:
                out[hw:n - hw] += w * a[hw + k:n - hw + k]
        for i, (offs, ws) in self.edge.items():
            acc = np.zeros_like(a[0])
            for o, w in zip(offs, ws):
                acc = acc + w * a[i + o]
            out[i] = acc
        return np.moveaxis(out / self.h, 0, axis)


class _Twist:
    """Frame built from phi^a with the oracle's own derivative."""

    def __init__(self, phi_a: Sequence[np.ndarray], deriv: SliceDerivative):
        self.dim = len(phi_a)
        self.deriv = deriv
        d = self.dim
        frame = np.empty((d, d) + phi_a[0].shape, dtype=complex)
        for a in range(d):
            for mu in range(d):
                frame[a, mu] = deriv(np.asarray(phi_a[a], dtype=complex), mu)
        if d == 2:
            det = frame[0, 0] * frame[1, 1] - frame[0, 1] * frame[1, 0]
            inv = np.empty_like(frame)  # inv[mu, a] = e_a^mu
            inv[0, 0] = frame[1, 1] / det
            inv[1, 1] = frame[0, 0] / det
            inv[0, 1] = -frame[0, 1] / det
            inv[1, 0] = -frame[1, 0] / det
        else:
            mats = np.moveaxis(frame, (0, 1), (-2, -1))
            det = np.linalg.det(mats)
            inv = np.moveaxis(np.linalg.inv(mats), (-2, -1), (0, 1))
        self.det = det
        self.inv = inv

    def X(self, a: int, f: np.ndarray) -> np.ndarray:
        return sum(self.inv[mu, a] * self.deriv(f, mu) for mu in range(self.dim))


def _grid_axis(grid) -> np.ndarray:
    return -grid.half_width + np.arange(grid.n) * (2.0 * grid.half_width / (grid.n - 1))


def star_direct(theta: np.ndarray, phi_a: Sequence[np.ndarray], f: np.ndarray, g: np.ndarray,
                grid, N: int, points: Sequence[tuple[int, ...]], theta_scale: float = 1.0,
                order: int = ORACLE_ORDER) -> OracleResult:
    """Truncated twisted product evaluated at index ``points``.

    Loops over every ordered pair of tuples ``(a_1..a_n), (b_1..b_n)``.
    """
    theta = np.asarray(theta, dtype=float) * theta_scale
    d = theta.shape[0]
    deriv = SliceDerivative(grid.n, 2.0 * grid.half_width / (grid.n - 1), order)
    tw = _Twist(phi_a, deriv)
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)

    def chain(h, idx, memo):
        if idx in memo:
            return memo[idx]
        val = h if not idx else tw.X(idx[0], chain(h, idx[1:], memo))
        memo[idx] = val
        return val

    memo_f: dict = {}
    memo_g: dict = {}
    sel = tuple(np.array(p) for p in zip(*points))
    total = (f * g)[sel]
    for n in range(1, N + 1):
        term = np.zeros(len(points), dtype=complex)
        for a_idx in itertools.product(range(d), repeat=n):
            fa = chain(f, a_idx, memo_f)[sel]
            for b_idx in itertools.product(range(d), repeat=n):
                c = 1.0
                for a, b in zip(a_idx, b_idx):
                    c *= theta[a, b]
                if c == 0.0:
                    continue
                term += c * fa * chain(g, b_idx, memo_g)[sel]
        total = total + (0.5j) ** n * term / math.factorial(n)
    h = 2.0 * grid.half_width / (grid.n - 1)
    return OracleResult(total, "direct-multiindex", error_estimate=h ** order, points=list(points))


def _xtilde(theta: np.ndarray, grid) -> list[np.ndarray]:
    inv = np.linalg.inv(np.asarray(theta, dtype=float))
    ax = _grid_axis(grid)
    xs = np.meshgrid(*([ax] * grid.dim), indexing="ij")
    return [sum(2.0 * inv[mu, nu] * xs[nu] for nu in range(grid.dim)) for mu in range(grid.dim)]


def laplacian(phi: np.ndarray, grid, order: int = ORACLE_ORDER) -> np.ndarray:
    deriv = SliceDerivative(grid.n, 2.0 * grid.half_width / (grid.n - 1), order)
    return sum(deriv(deriv(phi, mu), mu) for mu in range(grid.dim))


def commutative_residual(phi: np.ndarray, m2: float, lam: float, omega2: float, grid,
                         theta: np.ndarray | None = None, order: int = ORACLE_ORDER) -> OracleResult:
    """``-(box phi - m^2 phi - lam/3! phi^3 - Omega^2 x~^2 phi)``."""
    phi = np.asarray(phi, dtype=complex)
    out = -laplacian(phi, grid, order) + m2 * phi + lam / 6.0 * phi ** 3
    if omega2 and theta is not None:
        xt2 = sum(x * x for x in _xtilde(theta, grid))
        out = out + omega2 * xt2 * phi
    return OracleResult(out, "analytic-commutative")


def _commutative_density(phi, dphi, dphia, m2, lam, omega2, theta, grid):
    d = grid.dim
    dens = 0.5 * sum(dphi[mu] ** 2 for mu in range(d))
    dens = dens + 0.5 * sum(dphia[a][mu] ** 2 for a in range(d) for mu in range(d))
    dens = dens + 0.5 * m2 * phi ** 2 + lam / 24.0 * phi ** 4
    if omega2:
        xt2 = sum(x * x for x in _xtilde(theta, grid))
        dens = dens + 0.5 * omega2 * xt2 * phi ** 2
    return dens


def canonical_emt(phi: np.ndarray, phi_a: Sequence[np.ndarray], m2: float, lam: float, omega2: float,
                  grid, theta: np.ndarray, order: int = ORACLE_ORDER) -> OracleResult:
    """Decoupled-field EMT ``T[mu, nu] = -(d_nu phi d^mu phi + d_nu phi^c d^mu phi^c - delta L)``."""
    d = grid.dim
    deriv = SliceDerivative(grid.n, 2.0 * grid.half_width / (grid.n - 1), order)
    phi = np.asarray(phi, dtype=complex)
    dphi = [deriv(phi, mu) for mu in range(d)]
    dphia = [[deriv(np.asarray(p, dtype=complex), mu) for mu in range(d)] for p in phi_a]
    dens = _commutative_density(phi, dphi, dphia, m2, lam, omega2, theta, grid)
    out = np.empty((d, d) + phi.shape, dtype=complex)
    for mu in range(d):
        for nu in range(d):
            t = dphi[nu] * dphi[mu] + sum(dphia[c][nu] * dphia[c][mu] for c in range(d))
            out[mu, nu] = -t + (dens if mu == nu else 0.0)
    return OracleResult(out, "analytic-commutative")


def canonical_amt(phi, phi_a, m2, lam, omega2, grid, theta, order: int = ORACLE_ORDER) -> OracleResult:
    """``M[mu, nu, rho] = -(x_nu T[mu, rho] - x_rho T[mu, nu]) / 2`` from the canonical EMT."""
    t = canonical_emt(phi, phi_a, m2, lam, omega2, grid, theta, order).values
    d = grid.dim
    ax = _grid_axis(grid)
    xs = np.meshgrid(*([ax] * d), indexing="ij")
    out = np.zeros((d, d, d) + t.shape[2:], dtype=complex)
    for mu in range(d):
        for nu in range(d):
            for rho in range(d):
                out[mu, nu, rho] = -0.5 * (xs[nu] * t[mu, rho] - xs[rho] * t[mu, nu])
    return OracleResult(out, "analytic-commutative")


@dataclass(frozen=True)
class PolyFixture:
    name: str
    f: Callable[[list], np.ndarray]
    g: Callable[[list], np.ndarray]
    closed_form: Callable[[list], np.ndarray]
    min_order: int


def poly_star_table(theta: np.ndarray) -> list[PolyFixture]:
    """Closed forms for polynomial products with the trivial twist.

    Each callable takes the list of coordinate arrays ``[x^0, x^1, ...]``.
    """
    th = np.asarray(theta, dtype=float)
    inv = np.linalg.inv(th)
    d = th.shape[0]
    table: list[PolyFixture] = []
    for mu in range(d):
        for nu in range(d):
            t = th[mu, nu]
            table.append(PolyFixture(
                f"x{mu}*x{nu}", lambda x, mu=mu: x[mu], lambda x, nu=nu: x[nu],
                lambda x, mu=mu, nu=nu, t=t: x[mu] * x[nu] + 0.5j * t, 1))
            table.append(PolyFixture(
                f"x{mu}*x{nu}^2", lambda x, mu=mu: x[mu], lambda x, nu=nu: x[nu] ** 2,
                lambda x, mu=mu, nu=nu, t=t: x[mu] * x[nu] ** 2 + 1j * t * x[nu], 1))
            table.append(PolyFixture(
                f"x{mu}^2*x{nu}^2", lambda x, mu=mu: x[mu] ** 2, lambda x, nu=nu: x[nu] ** 2,
                lambda x, mu=mu, nu=nu, t=t: (x[mu] * x[nu]) ** 2 + 2j * t * x[mu] * x[nu] - 0.5 * t * t, 2))

    def probe(x):
        return x[0] ** 2 * x[1] + 3.0 * x[1] ** 2 - x[0]

    def probe_grad(x, mu):
        if mu == 0:
            return 2.0 * x[0] * x[1] - 1.0
        if mu == 1:
            return x[0] ** 2 + 6.0 * x[1]
        return np.zeros_like(x[0])

    for mu in range(d):
        def xt(x, mu=mu):
            return sum(2.0 * inv[mu, nu] * x[nu] for nu in range(d))
        table.append(PolyFixture(f"xt{mu}*p", xt, probe,
                                 lambda x, mu=mu, xt=xt: xt(x) * probe(x) + 1j * probe_grad(x, mu), 1))
        table.append(PolyFixture(f"p*xt{mu}", probe, xt,
                                 lambda x, mu=mu, xt=xt: xt(x) * probe(x) - 1j * probe_grad(x, mu), 1))
    return table
