import xml.etree.ElementTree as ET

import numpy as np
import pytest

from antgen import io as aio
from antgen.core import LabeledPattern, PointPattern, Window
from antgen.errors import PatternFileError
from antgen.intensity import IntensityField, RiskCurve
from antgen.plot import plot_k, plot_svg
from antgen.stats import Envelope, KFunction, csr_test

from conftest import constant_field, grid_field

SVG = "{http://www.w3.org/2000/svg}"
UNIT = Window(0, 1, 0, 1)


def gids(path):
    root = ET.parse(path).getroot()
    return [el.get("id") for el in root.iter() if el.get("id")], root


def test_pattern_round_trip_bit_exact(tmp_path, rng):
    p = PointPattern(UNIT, rng.uniform(0, 1, (100, 2)))
    aio.write_pattern(p, tmp_path / "p.csv")
    q = aio.read_pattern(tmp_path / "p.csv", UNIT)
    assert q.points.tobytes() == p.points.tobytes()


def test_labeled_round_trip(tmp_path, rng):
    lab = LabeledPattern(PointPattern(UNIT, rng.uniform(0, 1, (7, 2))), rng.uniform(size=7) < 0.5)
    aio.write_pattern(lab, tmp_path / "l.csv")
    back = aio.read_labeled(tmp_path / "l.csv", UNIT)
    assert back.pattern.points.tobytes() == lab.pattern.points.tobytes()
    np.testing.assert_array_equal(back.fixed, lab.fixed)


def test_auto_window(tmp_path):
    (tmp_path / "a.csv").write_text("x,y\r\n0,0\r\n1,1\r\n")
    p = aio.read_pattern(tmp_path / "a.csv")
    assert len(p) == 2
    np.testing.assert_allclose(p.window.as_tuple(), [-0.01, 1.01, -0.01, 1.01])


@pytest.mark.parametrize(
    "text, msg",
    [
        ("x,y\n", "no points"),
        ("", "empty"),
        ("x,y,z\n1,2,3\n", "row 1: unknown column 'z'"),
        ("x,y\n0.5,0.5\n0.1,abc\n", "row 3, column 'y'"),
        ("x,y\n0.5,nan\n", "row 2"),
        ("x,y,label\n0.5,0.5,maybe\n", "row 2, column 'label'"),
    ],
)
def test_read_errors(tmp_path, text, msg):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(PatternFileError, match=msg):
        aio.read_pattern(tmp_path / "bad.csv")


def test_out_of_window_row(tmp_path):
    (tmp_path / "o.csv").write_text("x,y\n0.5,0.5\n2,0.5\n")
    with pytest.raises(PatternFileError, match="row 3"):
        aio.read_pattern(tmp_path / "o.csv", UNIT)


def test_empty_pattern_writes_header(tmp_path):
    aio.write_pattern(PointPattern(UNIT), tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "x,y\n"


def test_field_round_trip(tmp_path):
    f = grid_field(lambda xy: 4 + xy[:, 0] * np.pi, Window(-1, 2, 0, 3), 9)
    f = IntensityField(f.box, f.values, f.values > 5.5)
    aio.write_field(f, tmp_path / "f.csv")
    g = aio.read_field(tmp_path / "f.csv")
    assert g.values.tobytes() == f.values.tobytes()
    np.testing.assert_array_equal(g.fixed_mask, f.fixed_mask)
    assert g.box == f.box


def test_k_and_envelope_round_trip(tmp_path):
    t = np.linspace(0, 0.25, 5)
    k = KFunction(t, np.pi * t**2 / 3, "naive")
    aio.write_k(k, tmp_path / "k.csv")
    assert aio.read_k(tmp_path / "k.csv").values.tobytes() == k.values.tobytes()
    env = Envelope(t, k.values, k.values, 3)
    aio.write_envelope(env, tmp_path / "e.csv")
    back = aio.read_envelope(tmp_path / "e.csv")
    np.testing.assert_array_equal(back.lower, back.upper)
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "t,lower,upper"


def test_atomic_write_leaves_no_temp(tmp_path):
    aio.write_json({"b": 1, "a": [1.5]}, tmp_path / "r.json")
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]
    assert (tmp_path / "r.json").read_text().startswith('{\n  "a"')
    with pytest.raises(OSError):
        aio.write_json({}, tmp_path / "missing" / "r.json")


def test_k_plot_structure(tmp_path):
    t = np.linspace(0, 0.2, 21)
    k = KFunction(t, np.pi * t**2 * 0.9, "ripley_corrected")
    env = Envelope(t, np.pi * t**2 * 0.8, np.pi * t**2 * 1.2, 100)
    plot_k(k, env, tmp_path / "k.svg")
    ids, _ = gids(tmp_path / "k.svg")
    assert ids.count("envelope-band") == 1
    assert ids.count("k-observed") == 1 and ids.count("k-theoretical") == 1


def test_svg_is_deterministic(tmp_path):
    f = constant_field(3.0, UNIT)
    plot_svg(f, tmp_path / "a.svg")
    plot_svg(f, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    ids, _ = gids(tmp_path / "a.svg")
    assert "colorbar-linear" in ids


def test_log_colorbar_ticks(tmp_path):
    f = grid_field(lambda xy: 10.0 ** (4 * xy[:, 0]), UNIT, 11)
    plot_svg(f, tmp_path / "f.svg")
    ids, root = gids(tmp_path / "f.svg")
    assert "colorbar-log" in ids
    cbar = next(el for el in root.iter() if el.get("id") == "colorbar-log")
    labels = [t.text.strip() for t in cbar.iter(SVG + "text") if t.text and t.text.strip().startswith("1e")]
    assert {"1e0", "1e2", "1e4"} <= set(labels)
    for lab in labels:
        assert lab[2:].lstrip("-").isdigit()


def test_pattern_and_report_plots(tmp_path, rng):
    plot_svg(PointPattern(UNIT), tmp_path / "empty.svg")
    ET.parse(tmp_path / "empty.svg")
    lab = LabeledPattern(PointPattern(UNIT, rng.uniform(0, 1, (30, 2))), np.arange(30) < 10)
    plot_svg(lab, tmp_path / "lab.svg")
    ids, _ = gids(tmp_path / "lab.svg")
    assert "points-fixed" in ids and "points-free" in ids
    plot_svg(RiskCurve(np.array([0.1, 0.2, 0.4]), np.array([3.0, 1.0, 2.0])), tmp_path / "r.svg")
    assert "risk-curve" in gids(tmp_path / "r.svg")[0]
    p = PointPattern(UNIT, rng.uniform(0, 1, (60, 2)))
    rep = csr_test(p, constant_field(60.0, UNIT), n_sims=5)
    plot_svg(rep, tmp_path / "rep.svg")
    assert "envelope-band" in gids(tmp_path / "rep.svg")[0]
    with pytest.raises(TypeError):
        plot_svg(42, tmp_path / "x.svg")
