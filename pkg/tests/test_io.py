import json

import numpy as np
import pytest

from twistgw.grid import BoxGrid, ScalarField
from twistgw.io import read_snapshot, snapshot_grid, tensor_slice_rows, write_csv, write_snapshot
from twistgw.tensor import TensorField


def test_snapshot_round_trip_and_layout(tmp_path):
    g = BoxGrid(2, 3.0, 20)
    f = ScalarField(g, g.coordinate(0) + 1j * g.coordinate(1))
    h = ScalarField(g, np.exp(-g.radius_sq()))
    binp, jsonp = write_snapshot(tmp_path / "snap", [f, h], np.array([[0, 0.7], [-0.7, 0]]), ["f", "h"])
    raw = binp.read_bytes()
    assert len(raw) == 2 * 20 * 20 * 16
    # little-endian complex128, row-major: element [0, 1] of the first field is second
    first = np.frombuffer(raw[16:32], dtype="<c16")[0]
    assert first == f.values[0, 1]
    header = json.loads(jsonp.read_text())
    assert header["fields"] == ["f", "h"] and header["n"] == 20 and header["D"] == 2
    arrays, hdr = read_snapshot(tmp_path / "snap.bin")
    assert np.array_equal(arrays[0], f.values) and np.array_equal(arrays[1], h.values)
    assert snapshot_grid(hdr) == g


def test_truncated_snapshot_is_rejected(tmp_path):
    g = BoxGrid(2, 3.0, 20)
    binp, _ = write_snapshot(tmp_path / "snap", [g.x(0)])
    binp.write_bytes(binp.read_bytes()[:-16])
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "snap")


def test_snapshot_needs_fields(tmp_path):
    with pytest.raises(ValueError):
        write_snapshot(tmp_path / "s", [])


def test_csv_format(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "b"], [[0.1, "x"], [np.float64(2.0), 3]])
    assert p.read_text() == "a,b\n0.1,x\n2.0,3\n"


def test_tensor_slice_rows():
    g = BoxGrid(2, 3.0, 21)
    t = TensorField.from_list([g.x(0), g.x(1)], labels=("mu",))
    header, rows = tensor_slice_rows(t, axis=0)
    assert header == ["x", "re_0", "im_0", "re_1", "im_1"]
    assert len(rows) == 21
    assert rows[3][0] == rows[3][1] and rows[3][3] == pytest.approx(0.0)
