"""Indexed families of scalar fields (currents, EMT, AMT)."""
from __future__ import annotations

import itertools
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .grid import BoxGrid, ScalarField, field_norm


class TensorField:
    """Rank-``r`` tensor over a grid, one :class:`ScalarField` per index tuple.

    ``antisymmetric`` lists index-position pairs the tensor is declared
    antisymmetric in; :meth:`antisymmetry_defect` measures how well that holds.
    """

    def __init__(self, grid: BoxGrid, rank: int, components: Mapping[tuple[int, ...], ScalarField],
                 labels: Sequence[str] | None = None, antisymmetric: Iterable[tuple[int, int]] = ()):
        self.grid = grid
        self.rank = rank
        self.labels = tuple(labels) if labels else tuple(f"i{k}" for k in range(rank))
        self.antisymmetric = tuple(tuple(p) for p in antisymmetric)
        comps = {}
        for idx in self.indices():
            comps[idx] = components[idx] if idx in components else grid.zeros()
        self.components = comps

    @property
    def dim(self) -> int:
        return self.grid.dim

    def indices(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(range(self.grid.dim), repeat=self.rank)

    def __getitem__(self, idx) -> ScalarField:
        if not isinstance(idx, tuple):
            idx = (idx,)
        return self.components[idx]

    @classmethod
    def zeros(cls, grid: BoxGrid, rank: int, **kw) -> "TensorField":
        return cls(grid, rank, {}, **kw)

    @classmethod
    def from_list(cls, fields: Sequence[ScalarField], **kw) -> "TensorField":
        grid = fields[0].grid
        return cls(grid, 1, {(k,): f for k, f in enumerate(fields)}, **kw)

    @classmethod
    def from_nested(cls, fields, **kw) -> "TensorField":
        grid = fields[0][0].grid
        d = len(fields)
        return cls(grid, 2, {(i, j): fields[i][j] for i in range(d) for j in range(d)}, **kw)

    def map(self, fn: Callable[[ScalarField], ScalarField]) -> "TensorField":
        return TensorField(self.grid, self.rank, {k: fn(v) for k, v in self.components.items()},
                           self.labels, self.antisymmetric)

    def _combine(self, other: "TensorField", op) -> "TensorField":
        if other.rank != self.rank or other.grid != self.grid:
            raise ValueError("tensor rank or grid mismatch")
        return TensorField(self.grid, self.rank,
                           {k: op(v, other.components[k]) for k, v in self.components.items()},
                           self.labels, self.antisymmetric)

    def __add__(self, other: "TensorField") -> "TensorField":
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other: "TensorField") -> "TensorField":
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, c) -> "TensorField":
        return self.map(lambda f: f * c)

    __rmul__ = __mul__

    def __neg__(self) -> "TensorField":
        return self.map(lambda f: -f)

    def norm(self) -> float:
        """Max over components of the interior max-abs."""
        return max(field_norm(f) for f in self.components.values())

    def stacked(self) -> np.ndarray:
        d = self.grid.dim
        out = np.empty((d,) * self.rank + self.grid.shape, dtype=complex)
        for idx, f in self.components.items():
            out[idx] = f.values
        return out

    def antisymmetry_defect(self) -> float:
        worst = 0.0
        for i, j in self.antisymmetric:
            for idx in self.indices():
                swapped = list(idx)
                swapped[i], swapped[j] = swapped[j], swapped[i]
                diff = self.components[idx] + self.components[tuple(swapped)]
                worst = max(worst, field_norm(diff))
        return worst

    def __repr__(self) -> str:
        return f"TensorField(rank={self.rank}, labels={self.labels}, norm={self.norm():.3g})"
