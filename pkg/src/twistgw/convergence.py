"""Truncation-order scaling studies.

The defect of an identity that holds only for the untruncated product shrinks
like ``s^(N+1)`` when every ``Theta`` entry is multiplied by ``s``. Halving ``s``
should therefore divide the defect by ``2^(N+1)``; the fitted slope of
``log2(defect)`` against ``log2(s)`` is compared with ``N + 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import ScalarField, field_norm
from .star import StarConfig

DEFAULT_SCALES = (1.0, 0.5, 0.25)


def associativity_defect(cfg: StarConfig, f: ScalarField, g: ScalarField, h: ScalarField) -> float:
    c = cfg.calc
    return field_norm(c.star(c.star(f, g), h) - c.star(f, c.star(g, h)))


def leibniz_defect(cfg: StarConfig, f: ScalarField, g: ScalarField, a: int = 0) -> float:
    """``X_a (f*g) - (X_a f)*g - f*(X_a g)``."""
    c = cfg.calc
    return field_norm(c.X(a, c.star(f, g)) - c.star(c.X(a, f), g) - c.star(f, c.X(a, g)))


@dataclass
class ScalingRow:
    identity: str
    N: int
    scales: list[float]
    defects: list[float]
    reference: float
    slope: float | None = None
    exact: bool = False
    ratios: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"identity": self.identity, "N": self.N, "scales": self.scales, "defects": self.defects,
                "reference": self.reference, "slope": self.slope, "exact": self.exact, "log2_ratios": self.ratios}


def fit_slope(scales: Sequence[float], defects: Sequence[float]) -> float | None:
    """Least-squares slope of ``log2 defect`` against ``log2 scale``; None for a single row."""
    if len(scales) < 2:
        return None
    xs = np.log2(np.asarray(scales, dtype=float))
    ys = np.log2(np.maximum(np.asarray(defects, dtype=float), 1e-300))
    return float(np.polyfit(xs, ys, 1)[0])


def scaling_row(name: str, base: StarConfig, defect: Callable[[StarConfig], float], reference: float,
                scales: Sequence[float] = DEFAULT_SCALES, exact_floor: float = 1e-12) -> ScalingRow:
    defects = [defect(base.with_(theta_scale=s)) for s in scales]
    ratios = [math.log2(max(a, 1e-300) / max(b, 1e-300)) for a, b in zip(defects, defects[1:])]
    row = ScalingRow(name, base.N, list(scales), defects, reference, ratios=ratios)
    if max(defects) <= exact_floor * max(reference, 1e-300):
        row.exact = True
    else:
        row.slope = fit_slope(scales, defects)
    return row


def scaling_table(base: StarConfig, fields: Sequence[ScalarField], orders: Sequence[int] = (1, 2, 3),
                  scales: Sequence[float] = DEFAULT_SCALES, exact_floor: float = 1e-12) -> list[ScalingRow]:
    """Associativity and Leibniz rows for each truncation order."""
    f, g, h = fields[:3]
    ref = max(field_norm(f), 1e-300) * max(field_norm(g), 1e-300) * max(field_norm(h), 1.0)
    rows = []
    for n in orders:
        cfg = base.with_(N=n)
        rows.append(scaling_row("associativity", cfg, lambda c: associativity_defect(c, f, g, h), ref, scales, exact_floor))
        lref = max(field_norm(cfg.calc.X(0, f)), 1e-300) * max(field_norm(g), 1e-300)
        rows.append(scaling_row("leibniz", cfg, lambda c: leibniz_defect(c, f, g), lref, scales, exact_floor))
    return rows


def format_table(rows: Sequence[ScalingRow]) -> str:
    lines = [f"{'identity':<14}{'N':>3}  " + "  ".join(f"s={s:<8g}" for s in rows[0].scales) + "   slope"]
    for r in rows:
        slope = "exact" if r.exact else ("-" if r.slope is None else f"{r.slope:6.2f}")
        lines.append(f"{r.identity:<14}{r.N:>3}  " + "  ".join(f"{d:10.3e}" for d in r.defects) + f"   {slope}")
    return "\n".join(lines)
