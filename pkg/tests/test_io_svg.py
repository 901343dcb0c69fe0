"""CSV/JSON artifact writers and the dependency-free SVG renderer."""

import json

import numpy as np
import pytest

from diffgeo import DomainError, SpacetimePoint
from diffgeo.geometry import straight_curve
from diffgeo.io import (
    read_csv,
    read_json,
    write_chains_csv,
    write_csv,
    write_curve_csv,
    write_json,
    write_matrix_csv,
    write_trace_csv,
    write_traces_csv,
)
from diffgeo.svg import SvgCanvas
from diffgeo.tps import straight_chain


def test_csv_round_trip_exact(tmp_path):
    rows = [[0.1, -2.5e-17, 3.0], [1.0 / 3.0, 7.25, np.pi]]
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b", "c"], rows)
    header, mat = read_csv(p)
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(mat, np.asarray(rows))  # repr round-trips floats


def test_csv_is_crlf_terminated(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["x"], [[1.5]])
    raw = p.read_bytes()
    assert raw == b"x\r\n1.5\r\n"


def test_curve_csv_columns(tmp_path, vp, gmm1d):
    curve = straight_curve(SpacetimePoint([-1.0], 0.2), SpacetimePoint([1.0], 0.6), 9)
    p = tmp_path / "curve.csv"
    write_curve_csv(p, curve)
    header, mat = read_csv(p)
    assert header == ["s", "t", "x_1"]
    assert mat.shape == (9, 3)
    np.testing.assert_allclose(mat[:, 0], np.linspace(0, 1, 9))
    np.testing.assert_array_equal(mat[:, 1], curve.t)
    np.testing.assert_array_equal(mat[:, 2], curve.x[:, 0])


def test_curve_csv_with_params(tmp_path, vp, gmm1d):
    from diffgeo.geometry import curve_params

    curve = straight_curve(SpacetimePoint([-1.0], 0.2), SpacetimePoint([1.0], 0.6), 5)
    etas, mus = curve_params(gmm1d, vp, curve)
    p = tmp_path / "curve.csv"
    write_curve_csv(p, curve, etas=etas, mus=mus)
    header, mat = read_csv(p)
    assert header == ["s", "t", "x_1", "eta_1", "eta_2", "mu_1", "mu_2"]
    np.testing.assert_array_equal(mat[:, 3:5], etas)
    np.testing.assert_array_equal(mat[:, 5:7], mus)


def test_trace_writers(tmp_path):
    p = tmp_path / "tr.csv"
    write_trace_csv(p, [3.0, 2.0, 1.5], name="energy")
    header, mat = read_csv(p)
    assert header == ["step", "energy"]
    np.testing.assert_array_equal(mat[:, 0], [0, 1, 2])

    p2 = tmp_path / "trs.csv"
    write_traces_csv(p2, {"energy": [1.0, 2.0], "penalty": [np.nan, 0.5]})
    header2, mat2 = read_csv(p2)
    assert header2 == ["step", "energy", "penalty"]
    assert np.isnan(mat2[0, 2])
    assert mat2[1, 2] == 0.5


def test_matrix_csv(tmp_path):
    import csv

    mat = np.array([[0.0, 1.25], [1.25, 0.0]])
    p = tmp_path / "m.csv"
    write_matrix_csv(p, mat)
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["", "p0", "p1"]
    assert rows[1][0] == "p0" and rows[2][0] == "p1"
    got = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    np.testing.assert_array_equal(got, mat)


def test_chains_csv(tmp_path):
    ch = straight_chain([0.0, 0.0], [1.0, 1.0], 4)
    p = tmp_path / "c.csv"
    write_chains_csv(p, [ch, ch])
    header, mat = read_csv(p)
    assert header == ["path_id", "step", "x_1", "x_2", "geodesic_index"]
    assert mat.shape == (8, 5)
    np.testing.assert_array_equal(mat[:4, 0], 0)
    np.testing.assert_array_equal(mat[4:, 0], 1)


def test_json_sorted_and_stable(tmp_path):
    p = tmp_path / "r.json"
    write_json(p, {"zeta": 1, "alpha": {"b": 2.5, "a": [1, 2]}})
    text = p.read_text()
    assert text.index('"alpha"') < text.index('"zeta"')
    assert text.endswith("\n")
    assert read_json(p) == {"zeta": 1, "alpha": {"b": 2.5, "a": [1, 2]}}
    # rewriting produces identical bytes
    before = p.read_bytes()
    write_json(p, json.loads(text))
    assert p.read_bytes() == before


def test_svg_renders_heatmap_and_path(tmp_path):
    canvas = SvgCanvas(extent=((-2.0, 2.0), (0.0, 1.0)), width=120, height=90)
    vals = np.linspace(0, 1, 12).reshape(4, 3)
    canvas.heatmap(vals)
    canvas.polyline([-2.0, 0.0, 2.0], [0.0, 0.5, 1.0], color="white")
    canvas.scatter([0.0], [0.5], color="red")
    doc = canvas.render()
    assert doc.startswith("<svg")
    assert doc.count("<rect") >= 13  # background + cells
    assert "<polyline" in doc and "<circle" in doc
    p = tmp_path / "out.svg"
    canvas.save(p)
    assert p.read_text() == doc


def test_svg_rejects_bad_extent():
    with pytest.raises(DomainError):
        SvgCanvas(extent=((2.0, -2.0), (0.0, 1.0)))
