"""Twist data: the deformation matrix, the frame built from the noncommutativity
scalars, the commuting vector fields ``X_a`` and ``X~^a``, and ``x~``."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import DEFAULT_STENCIL, BoxGrid, GridError, ScalarField, StencilSpec, partial
from .tensor import TensorField


class DegenerateFrame(ValueError):
    """The frame ``e^a_mu`` is (numerically) singular somewhere on the interior."""

    def __init__(self, message: str, point: tuple[float, ...] | None = None, det: float | None = None):
        super().__init__(message)
        self.point = point
        self.det = det


@dataclass(frozen=True, eq=False)
class ThetaMatrix:
    """Constant skew-symmetric invertible ``D x D`` matrix ``Theta^{ab}``."""

    entries: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        mat = np.array(self.entries, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("theta must be a square matrix")
        if mat.shape[0] % 2:
            raise ValueError("theta needs even dimension")
        if not np.array_equal(mat, -mat.T):
            raise ValueError("theta must be exactly skew-symmetric")
        if np.linalg.matrix_rank(mat) < mat.shape[0]:
            raise ValueError("theta must be invertible")
        mat.setflags(write=False)
        inv = np.linalg.inv(mat)
        inv = 0.5 * (inv - inv.T)
        inv.setflags(write=False)
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "inverse", inv)

    @classmethod
    def block(cls, thetas: Sequence[float]) -> "ThetaMatrix":
        """Block-diagonal form with 2x2 blocks ``[[0, t], [-t, 0]]``."""
        d = 2 * len(thetas)
        mat = np.zeros((d, d))
        for j, t in enumerate(thetas):
            mat[2 * j, 2 * j + 1] = t
            mat[2 * j + 1, 2 * j] = -t
        return cls(mat)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def scaled(self, s: float) -> "ThetaMatrix":
        return ThetaMatrix(s * self.entries)

    def nonzero_pairs(self) -> list[tuple[int, int, float]]:
        d = self.dim
        return [(a, b, float(self.entries[a, b])) for a in range(d) for b in range(d) if self.entries[a, b] != 0]

    def to_list(self) -> list[list[float]]:
        return self.entries.tolist()


class Vielbein:
    """Frame data derived from ``D`` noncommutativity scalars ``phi^a``.

    ``frame[a, mu] = d_mu phi^a``, ``inverse_frame[mu, a] = e_a^mu``,
    ``det = det e^a_mu`` and ``inv_det = 1/det``.
    """

    def __init__(self, phi_a: Sequence[ScalarField], frame: np.ndarray, inverse_frame: np.ndarray,
                 det: ScalarField, inv_det: ScalarField, stencil: StencilSpec):
        self.phi_a = tuple(phi_a)
        self.frame = frame
        self.inverse_frame = inverse_frame
        self.det = det
        self.inv_det = inv_det
        self.stencil = stencil

    @property
    def grid(self) -> BoxGrid:
        return self.det.grid

    @property
    def dim(self) -> int:
        return len(self.phi_a)

    def e_frame(self, a: int, mu: int) -> ScalarField:
        return ScalarField(self.grid, self.frame[a, mu], check=False)

    def e_inv(self, mu: int, a: int) -> ScalarField:
        """Inverse frame component ``e_a^mu``."""
        return ScalarField(self.grid, self.inverse_frame[mu, a], check=False)

    def is_trivial(self, tol: float = 1e-12) -> bool:
        eye = np.eye(self.dim).reshape(self.dim, self.dim, *([1] * self.dim))
        return bool(np.max(np.abs(self.frame - eye)) <= tol)


def build_vielbein(phi_a: Sequence[ScalarField], spec: StencilSpec = DEFAULT_STENCIL,
                   eps_det: float = 1e-10) -> Vielbein:
    """Frame ``e^a_mu = d_mu phi^a`` with pointwise inverse and determinant."""
    phi_a = list(phi_a)
    if not phi_a:
        raise ValueError("need D noncommutativity scalars")
    grid = phi_a[0].grid
    d = grid.dim
    if len(phi_a) != d:
        raise ValueError(f"need {d} scalars phi^a, got {len(phi_a)}")
    if any(p.grid != grid for p in phi_a):
        raise GridError("phi^a live on different grids")
    frame = np.empty((d, d) + grid.shape, dtype=complex)
    for a in range(d):
        for mu in range(d):
            frame[a, mu] = partial(phi_a[a], mu, spec).values
    # pointwise matrices with index order (..., a, mu)
    mats = np.moveaxis(frame, (0, 1), (-2, -1))
    det = np.linalg.det(mats)
    interior_det = np.abs(det[grid.interior])
    worst = np.unravel_index(int(np.argmin(interior_det)), interior_det.shape)
    if interior_det[worst] < eps_det:
        point = tuple(float(grid.axis[i + grid.margin]) for i in worst)
        raise DegenerateFrame(
            f"frame determinant {interior_det[worst]:.3e} below {eps_det:g} at x={point}",
            point=point, det=float(interior_det[worst]),
        )
    inner = det[grid.interior].real
    if np.min(inner) < 0.0 < np.max(inner):
        # a real determinant that changes sign vanishes between grid points
        point = tuple(float(grid.axis[i + grid.margin]) for i in worst)
        raise DegenerateFrame(
            f"frame determinant changes sign on the interior (smallest |det| {interior_det[worst]:.3e} at x={point})",
            point=point, det=float(interior_det[worst]),
        )
    if np.min(np.abs(det)) < eps_det:
        raise DegenerateFrame("frame is singular inside the margin band; damp the twist towards phi^a = x^a")
    inv = np.linalg.inv(mats)  # (..., mu, a)
    inverse_frame = np.moveaxis(inv, (-2, -1), (0, 1))
    det_f = ScalarField(grid, det)
    return Vielbein(phi_a, frame, inverse_frame, det_f, ScalarField(grid, 1.0 / det), spec)


def identity_vielbein(grid: BoxGrid, spec: StencilSpec = DEFAULT_STENCIL) -> Vielbein:
    return build_vielbein([grid.x(a) for a in range(grid.dim)], spec)


def X_apply(v: Vielbein, a: int, f: ScalarField) -> ScalarField:
    """``X_a f = e_a^mu d_mu f``."""
    if not 0 <= a < v.dim:
        raise IndexError(f"frame index {a} out of range")
    if f.is_constant():
        return f.grid.zeros()
    out = np.zeros(f.grid.shape, dtype=complex)
    for mu in range(v.dim):
        out += v.inverse_frame[mu, a] * partial(f, mu, v.stencil).values
    return ScalarField(f.grid, out, check=False)


def Xtilde_apply(theta: ThetaMatrix, v: Vielbein, a: int, f: ScalarField, scale: float = 1.0) -> ScalarField:
    """``X~^a f = (i/2) Theta^{ab} X_b f`` with ``Theta`` multiplied by ``scale``."""
    if not 0 <= a < v.dim:
        raise IndexError(f"frame index {a} out of range")
    out = f.grid.zeros()
    for b in range(v.dim):
        t = theta.entries[a, b] * scale
        if t != 0:
            out = out + (0.5j * t) * X_apply(v, b, f)
    return out


def xtilde_coords(theta: ThetaMatrix, grid: BoxGrid) -> list[ScalarField]:
    """``x~_mu = 2 (Theta^{-1})_{mu nu} x^nu``."""
    xs = [grid.coordinate(nu) for nu in range(grid.dim)]
    out = []
    for mu in range(grid.dim):
        vals = np.zeros(grid.shape)
        for nu in range(grid.dim):
            c = theta.inverse[mu, nu]
            if c != 0:
                vals = vals + 2.0 * c * xs[nu]
        out.append(ScalarField(grid, vals))
    return out


def twisted_theta(theta: ThetaMatrix, v: Vielbein):
    """Position-dependent ``Theta~^{mu nu} = Theta^{ab} e_a^mu e_b^nu`` as a rank-2 tensor."""
    d = v.dim
    comps = np.einsum("ab,ma...,nb...->mn...", theta.entries, v.inverse_frame, v.inverse_frame)
    fields = [[ScalarField(v.grid, comps[m, n], check=False) for n in range(d)] for m in range(d)]
    return TensorField.from_nested(fields, labels=("mu", "nu"), antisymmetric=((0, 1),))
