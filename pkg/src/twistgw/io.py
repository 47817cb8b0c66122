"""Field snapshots and CSV tables.

A snapshot is two files: ``<stem>.bin`` holds the fields back to back as
little-endian complex128 in row-major order, ``<stem>.json`` holds the grid
(D, n, L, margin), Theta and the field names in storage order.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import BoxGrid, ScalarField
from .tensor import TensorField

_DTYPE = np.dtype("<c16")


def _stem(path: str | Path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".bin", ".json") else p


def write_snapshot(path: str | Path, fields: Sequence[ScalarField], theta: np.ndarray | None = None,
                   names: Sequence[str] | None = None) -> tuple[Path, Path]:
    if not fields:
        raise ValueError("nothing to write")
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise ValueError("snapshot fields live on different grids")
    names = list(names) if names is not None else [f"field{k}" for k in range(len(fields))]
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data = np.stack([np.ascontiguousarray(f.values, dtype=_DTYPE) for f in fields])
    bin_path, json_path = stem.with_suffix(".bin"), stem.with_suffix(".json")
    bin_path.write_bytes(data.tobytes(order="C"))
    header = {
        "D": grid.dim,
        "n": grid.n,
        "L": grid.half_width,
        "margin": grid.margin,
        "theta": None if theta is None else np.asarray(theta, dtype=float).tolist(),
        "dtype": "complex128-le",
        "order": "row-major",
        "fields": names,
    }
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return bin_path, json_path


def read_snapshot(path: str | Path) -> tuple[list[np.ndarray], dict]:
    """Return the raw arrays and the header of a snapshot."""
    stem = _stem(path)
    header = json.loads(stem.with_suffix(".json").read_text())
    shape = (header["n"],) * header["D"]
    raw = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype=_DTYPE)
    count = len(header["fields"])
    if raw.size != count * int(np.prod(shape)):
        raise ValueError(f"snapshot {stem} holds {raw.size} values, header implies {count} x {shape}")
    arrays = raw.reshape((count,) + shape).astype(complex)
    return [arrays[k] for k in range(count)], header


def snapshot_grid(header: dict) -> BoxGrid:
    return BoxGrid(header["D"], header["L"], header["n"], header["margin"])


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=",", lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return p


def tensor_slice_rows(t: TensorField, axis: int = 0, index: int | None = None) -> tuple[list[str], list[list]]:
    """Rows of a tensor along the grid line through the centre, one column per component part."""
    grid = t.grid
    mid = grid.n // 2 if index is None else index
    coords = grid.axis
    sel: list = [mid] * grid.dim
    names = ["x"]
    cols = []
    for idx in t.indices():
        tag = "".join(str(i) for i in idx) or "s"
        names += [f"re_{tag}", f"im_{tag}"]
        cols.append(idx)
    rows = []
    for k in range(grid.n):
        sel[axis] = k
        row: list = [float(coords[k])]
        for idx in cols:
            val = t[idx].values[tuple(sel)]
            row += [float(val.real), float(val.imag)]
        rows.append(row)
    return names, rows
