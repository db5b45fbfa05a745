import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from antgen.core import (
    FIXED,
    FREE,
    LabeledPattern,
    PointPattern,
    Window,
    count_in,
    has_duplicates,
    pairwise_distances,
)


@pytest.mark.parametrize("bounds", [(1, 0, 0, 1), (0, 1, 1, 1), (0, 0, 0, 0), (0, np.nan, 0, 1)])
def test_window_rejects_bad_bounds(bounds):
    with pytest.raises(ValueError):
        Window(*bounds)


def test_window_area():
    assert Window(0, 2, 0, 5).area == 10


def test_pattern_rejects_outside_and_nonfinite(unit):
    with pytest.raises(ValueError, match="outside"):
        PointPattern(unit, [[0.5, 1.5]])
    with pytest.raises(ValueError, match="finite"):
        PointPattern(unit, [[np.inf, 0.5]])


def test_pattern_is_immutable(random_pattern):
    with pytest.raises(ValueError):
        random_pattern.points[0, 0] = 0.3


def test_labeled_length_mismatch(random_pattern):
    with pytest.raises(ValueError):
        LabeledPattern(random_pattern, [True, False])
    lab = LabeledPattern.from_labels(random_pattern, [FREE] * 9 + [FIXED])
    assert lab.labels[-1] == FIXED and lab.fixed.sum() == 1


def test_count_in_trivial(unit):
    assert count_in(PointPattern(unit), unit) == 0
    assert count_in(PointPattern(unit, [[0.5, 0.5]]), unit) == 1


def test_count_in_diagonal():
    w = Window(0, 10, 0, 10)
    pts = np.array([[1, 1], [3, 3], [5, 5], [7, 7], [9, 9]], dtype=float)
    region = Window(0, 5, 0, 5)
    expected = sum(1 for x, y in pts if 0 <= x <= 5 and 0 <= y <= 5)
    assert count_in(PointPattern(w, pts), region) == expected == 3


def test_count_in_boundary_inclusive(unit):
    p = PointPattern(unit, [[0, 0], [1, 1], [0.5, 1.0]])
    assert count_in(p, unit) == 3
    # region outside the window is allowed
    assert count_in(p, Window(2, 3, 2, 3)) == 0


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=40),
    st.floats(0.01, 0.99),
    st.floats(0.01, 0.99),
)
def test_count_in_additive(points, sx, sy):
    w = Window(0, 1, 0, 1)
    p = PointPattern(w, np.array(points, dtype=float).reshape(-1, 2))
    # split on the open/closed convention: nudge the cut so no point lies on it
    xs = p.points[:, 0] if len(p) else np.array([])
    ys = p.points[:, 1] if len(p) else np.array([])
    if np.any(xs == sx) or np.any(ys == sy):
        return
    parts = [
        Window(0, sx, 0, sy),
        Window(sx, 1, 0, sy),
        Window(0, sx, sy, 1),
        Window(sx, 1, sy, 1),
    ]
    assert sum(count_in(p, r) for r in parts) == len(p)


def test_pairwise_distances_cases(unit, random_pattern):
    assert pairwise_distances(PointPattern(unit, [[0.3, 0.3]])).tolist() == [[0.0]]
    d = pairwise_distances(PointPattern(Window(0, 5, 0, 5), [[0, 0], [3, 4]]))
    assert d[0, 1] == 5.0 and d[1, 0] == 5.0
    D = pairwise_distances(random_pattern)
    pts = random_pattern.points
    for i in range(len(pts)):
        for j in range(len(pts)):
            expected = np.sqrt((pts[i, 0] - pts[j, 0]) ** 2 + (pts[i, 1] - pts[j, 1]) ** 2)
            assert D[i, j] == pytest.approx(expected, abs=1e-15)


def test_pairwise_triangle_inequality(random_pattern):
    D = pairwise_distances(random_pattern)
    for i, j, k in itertools.product(range(len(D)), repeat=3):
        assert D[i, k] <= D[i, j] + D[j, k] + 1e-12


def test_has_duplicates(unit):
    assert not has_duplicates(PointPattern(unit, [[0.1, 0.2], [0.2, 0.1]]))
    assert has_duplicates(PointPattern(unit, [[0.1, 0.2], [0.3, 0.3], [0.1, 0.2]]))
    assert not has_duplicates(PointPattern(unit, [[0.1, 0.2], [0.1, 0.2 + 1e-15]]))
