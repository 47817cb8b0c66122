"""Box grids, complex scalar fields, high-order partial derivatives and masked integrals.

Every field lives on an axis-aligned uniform box ``[-L, L]^D`` sampled with ``n``
points per axis. Derivatives use central finite differences of even order ``p``
in the bulk and same-order one-sided stencils near the faces. A margin band of
``m`` cells at each face is excluded from every norm and integral.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

Number = Union[int, float, complex]


class GridError(ValueError):
    """Raised for inconsistent grids or out-of-range axes."""


@dataclass(frozen=True)
class StencilSpec:
    order: int = 8

    def __post_init__(self) -> None:
        if self.order <= 0 or self.order % 2:
            raise GridError(f"stencil order must be a positive even integer, got {self.order}")

    @property
    def half_width(self) -> int:
        return self.order // 2


DEFAULT_STENCIL = StencilSpec()


@dataclass(frozen=True)
class BoxGrid:
    dim: int
    half_width: float
    n: int
    margin: int | None = None

    def __post_init__(self) -> None:
        if self.dim <= 0 or self.dim % 2:
            raise GridError(f"dimension must be a positive even integer, got {self.dim}")
        if self.n < 2:
            raise GridError("need at least two points per axis")
        if self.half_width <= 0:
            raise GridError("half_width must be positive")
        if self.margin is None:
            object.__setattr__(self, "margin", DEFAULT_STENCIL.half_width + 2)
        if self.margin < 0 or 2 * self.margin >= self.n:
            raise GridError(f"margin {self.margin} leaves no interior on n={self.n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + np.arange(self.n) * self.spacing

    @property
    def interior(self) -> tuple[slice, ...]:
        m = self.margin
        return (slice(m, self.n - m),) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def interior_volume(self) -> float:
        return ((self.n - 2 * self.margin) * self.spacing) ** self.dim

    def coordinate(self, mu: int) -> np.ndarray:
        """Coordinate ``x^mu`` as a full array."""
        self._check_axis(mu)
        shape = [1] * self.dim
        shape[mu] = self.n
        return np.broadcast_to(self.axis.reshape(shape), self.shape).copy()

    def x(self, mu: int) -> "ScalarField":
        return ScalarField(self, self.coordinate(mu))

    def radius_sq(self) -> np.ndarray:
        return sum(self.coordinate(mu) ** 2 for mu in range(self.dim))

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.shape, dtype=complex), check=False)

    def constant(self, value: Number) -> "ScalarField":
        return ScalarField(self, np.full(self.shape, value, dtype=complex), check=False)

    def check_stencil(self, spec: StencilSpec) -> None:
        if self.n < 2 * spec.half_width + 2 * self.margin + 1:
            raise GridError(
                f"grid n={self.n} too small for stencil order {spec.order} with margin {self.margin}"
            )

    def mirror_index(self) -> tuple[slice, ...]:
        """Index that maps x -> -x on this (symmetric) grid."""
        return (slice(None, None, -1),) * self.dim

    def header(self) -> dict:
        return {"D": self.dim, "n": self.n, "L": self.half_width, "margin": self.margin}

    def _check_axis(self, mu: int) -> None:
        if not 0 <= mu < self.dim:
            raise GridError(f"axis {mu} out of range for D={self.dim}")


class ScalarField:
    """Complex samples of a field on a :class:`BoxGrid`.

    Instances are treated as immutable; the star calculus caches derivative
    jets keyed on the object.
    """

    __slots__ = ("grid", "values", "__weakref__")

    def __init__(self, grid: BoxGrid, values: np.ndarray | Number, check: bool = True):
        arr = np.asarray(values)
        if arr.ndim == 0:
            arr = np.full(grid.shape, arr, dtype=complex)
        else:
            arr = arr.astype(complex, copy=False)
        if arr.shape != grid.shape:
            raise GridError(f"values of shape {arr.shape} do not match grid {grid.shape}")
        if check and not np.isfinite(arr).all():
            raise FloatingPointError("non-finite values in field")
        self.grid = grid
        self.values = arr

    # arithmetic ---------------------------------------------------------
    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise GridError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other), check=False)

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other), check=False)

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other(other) - self.values, check=False)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._other(other), check=False)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values, check=False)

    def conj(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.conj(), check=False)

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def is_constant(self) -> bool:
        flat = self.values.reshape(-1)
        return bool(np.all(flat == flat[0]))

    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    def mirrored(self) -> "ScalarField":
        return ScalarField(self.grid, self.values[self.grid.mirror_index()].copy(), check=False)

    def __repr__(self) -> str:
        return f"ScalarField(D={self.grid.dim}, n={self.grid.n}, max|f|={np.abs(self.values).max():.3g})"


def _fornberg(offsets: Sequence[int], deriv: int) -> list[Fraction]:
    """Exact finite-difference weights at 0 for the given integer offsets."""
    z = Fraction(0)
    x = [Fraction(o) for o in offsets]
    n = len(x) - 1
    c = [[Fraction(0)] * (deriv + 1) for _ in range(n + 1)]
    c[0][0] = Fraction(1)
    c1 = Fraction(1)
    c4 = x[0] - z
    for i in range(1, n + 1):
        mn = min(i, deriv)
        c2 = Fraction(1)
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return [c[i][deriv] for i in range(n + 1)]


@lru_cache(maxsize=64)
def derivative_matrix(n: int, spacing: float, order: int) -> np.ndarray:
    """Dense ``n x n`` first-derivative matrix of accuracy ``order``.

    Rows closer than ``order/2`` to either end use a one-sided window of
    ``order + 1`` points.
    """
    hw = order // 2
    if n < order + 1:
        raise GridError(f"n={n} too small for a stencil of order {order}")
    mat = np.zeros((n, n))
    for i in range(n):
        start = min(max(i - hw, 0), n - order - 1)
        offsets = [j - i for j in range(start, start + order + 1)]
        weights = _fornberg(offsets, 1)
        for off, w in zip(offsets, weights):
            mat[i, i + off] = float(w)
    mat /= spacing
    mat.setflags(write=False)
    return mat


def _apply_axis(mat: np.ndarray, arr: np.ndarray, mu: int) -> np.ndarray:
    moved = np.moveaxis(arr, mu, 0)
    out = np.tensordot(mat, moved, axes=([1], [0]))
    return np.moveaxis(out, 0, mu)


def partial(f: ScalarField, mu: int, spec: StencilSpec = DEFAULT_STENCIL) -> ScalarField:
    """Finite-difference derivative of ``f`` along axis ``mu``.

    Real and imaginary parts are differentiated separately so that a real
    input yields an exactly real output. Exactly constant inputs give zero.
    """
    grid = f.grid
    grid._check_axis(mu)
    grid.check_stencil(spec)
    if f.is_constant():
        return grid.zeros()
    mat = derivative_matrix(grid.n, grid.spacing, spec.order)
    re = _apply_axis(mat, np.ascontiguousarray(f.values.real), mu)
    if np.any(f.values.imag):
        im = _apply_axis(mat, np.ascontiguousarray(f.values.imag), mu)
        vals = re + 1j * im
    else:
        vals = re.astype(complex)
    return ScalarField(grid, vals, check=False)


def gradient(f: ScalarField, spec: StencilSpec = DEFAULT_STENCIL) -> list[ScalarField]:
    return [partial(f, mu, spec) for mu in range(f.grid.dim)]


def integrate(f: ScalarField, weight: ScalarField | None = None) -> complex:
    """Masked Riemann sum of ``f * weight`` over the interior."""
    grid = f.grid
    vals = f.values
    if weight is not None:
        if weight.grid != grid:
            raise GridError("integrand and weight live on different grids")
        vals = vals * weight.values
    return complex(np.sum(vals[grid.interior]) * grid.cell_volume)


def integrate_abs(f: ScalarField) -> float:
    grid = f.grid
    return float(np.sum(np.abs(f.values[grid.interior])) * grid.cell_volume)


def field_norm(f: ScalarField) -> float:
    """Max-abs over the interior."""
    return float(np.max(np.abs(f.interior_values())))


def band_max(f: ScalarField) -> float:
    """Max-abs inside the excluded margin band."""
    mask = np.ones(f.grid.shape, dtype=bool)
    mask[f.grid.interior] = False
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(f.values[mask])))


def check_decay(f: ScalarField, threshold: float) -> bool:
    """True if ``f`` stays below ``threshold`` inside the margin band."""
    return band_max(f) <= threshold


def max_norm(fields: Iterable[ScalarField]) -> float:
    return max((field_norm(f) for f in fields), default=0.0)
