import numpy as np
import pytest

from antgen.core import PointPattern, Window
from antgen.errors import InsufficientDataError, OverThinnedError
from antgen.simulate import derive_seed, simulate_homogeneous
from antgen.stats import (
    Envelope,
    KFunction,
    circle_fraction,
    classify,
    csr_test,
    default_t_grid,
    disk_fraction,
    envelope,
    k_naive,
    k_ripley,
    k_theoretical_poisson,
)

from conftest import constant_field
from oracles import mc_disk_fraction

W10 = Window(0, 10, 0, 10)
UNIT = Window(0, 1, 0, 1)


def test_naive_hand_value():
    p = PointPattern(W10, [[4, 5], [5, 5]])
    k = k_naive(p, [0.5, 1.0, 2.0])
    assert k.intensity == pytest.approx(0.02)
    np.testing.assert_allclose(k.values, [0, 0, 50])  # strict: r = 1 not counted at t = 1


def test_naive_saturates(random_pattern):
    k = k_naive(random_pattern, [0, 0.5, 2.0])
    n = len(random_pattern)
    assert k.values[0] == 0
    assert k.values[-1] == pytest.approx((n - 1) / (n / random_pattern.window.area))


def test_theoretical():
    k = k_theoretical_poisson([0, 1, 2])
    assert k.values[1] == np.pi
    assert k.values[2] == 4 * np.pi
    assert k.values[0] == 0


def test_too_few_points():
    for f in (k_naive, k_ripley):
        with pytest.raises(InsufficientDataError):
            f(PointPattern(UNIT, [[0.5, 0.5]]), [0.1])
    with pytest.raises(ValueError):
        k_ripley(PointPattern(UNIT, [[0.1, 0.1], [0.2, 0.2]]), [0.2, 0.1])


def test_interior_pair_matches_naive():
    p = PointPattern(W10, [[4, 5], [5, 5]])
    np.testing.assert_array_equal(k_ripley(p, [2.0]).values, k_naive(p, [2.0]).values)


def test_disk_fraction_special_cases():
    assert disk_fraction(5.0, 5.0, 5.0, W10) == pytest.approx(1.0)
    assert disk_fraction(0.0, 0.0, 1.0, W10) == pytest.approx(0.25)
    assert disk_fraction(0.0, 5.0, 1.0, W10) == pytest.approx(0.5)
    assert circle_fraction(0.0, 0.0, 1.0, W10) == pytest.approx(0.25)
    assert circle_fraction(5.0, 5.0, 1.0, W10) == pytest.approx(1.0)


def test_disk_fraction_vs_monte_carlo(rng):
    w = Window(0, 2, 0, 1)
    for _ in range(10):
        x, y = rng.uniform(0, 2), rng.uniform(0, 1)
        r = rng.uniform(0.05, 1.5)
        est = mc_disk_fraction(x, y, r, w, 200_000, rng)
        assert abs(disk_fraction(x, y, r, w) - est) < 0.005


def test_corner_pair_quadruples():
    p = PointPattern(W10, [[0, 0], [0.1, 0]])
    naive, ripley = k_naive(p, [0.2]).values[0], k_ripley(p, [0.2]).values[0]
    # point 0 sits in a corner (w = 1/4), point 1 on an edge (w close to 1/2)
    w1 = disk_fraction(0.1, 0.0, 0.1, W10)
    assert ripley == pytest.approx(naive / 2 * (4 + 1 / w1))


def test_ripley_properties(random_pattern):
    t = np.linspace(0, 0.5, 26)
    r, n = k_ripley(random_pattern, t).values, k_naive(random_pattern, t).values
    assert np.all(r >= n - 1e-15)
    assert np.all(np.diff(r) >= 0)
    rc = k_ripley(random_pattern, t, correction="circumference").values
    assert np.all(np.diff(rc) >= 0) and np.all(rc >= n - 1e-15)
    with pytest.raises(ValueError):
        k_ripley(random_pattern, t, correction="border")


def test_translation_and_dilation(random_pattern):
    t = np.linspace(0, 0.4, 21)
    base = k_ripley(random_pattern, t).values
    moved = k_ripley(random_pattern.translate(7.5, -3.0), t).values
    np.testing.assert_allclose(moved, base, rtol=1e-9)
    for s in (0.5, 3.0):
        for est in (k_ripley, k_naive):
            d = est(random_pattern.dilate(s), s * t).values
            np.testing.assert_allclose(d, s**2 * est(random_pattern, t).values, rtol=1e-9)


def test_default_grid():
    t = default_t_grid(Window(0, 4, 0, 2))
    assert len(t) == 50 and t[0] == 0 and t[-1] == 0.5


def test_envelope_preconditions_and_degenerate(random_pattern):
    t = np.linspace(0, 0.3, 11)
    with pytest.raises(ValueError):
        envelope(lambda s: random_pattern, 1, t)
    env = envelope(lambda s: random_pattern, 5, t)
    k = k_ripley(random_pattern, t).values
    np.testing.assert_array_equal(env.lower, k)
    np.testing.assert_array_equal(env.upper, k)
    with pytest.raises(InsufficientDataError):
        envelope(lambda s: PointPattern(UNIT), 3, t)


def test_envelope_thread_independence(monkeypatch):
    t = np.linspace(0, 0.2, 11)
    gen = lambda s: simulate_homogeneous(50, UNIT, s)
    a = envelope(gen, 8, t, seed=3, workers=1)
    b = envelope(gen, 8, t, seed=3, workers=4)
    monkeypatch.setenv("ANTGEN_THREADS", "3")
    c = envelope(gen, 8, t, seed=3)
    for e in (b, c):
        assert e.lower.tobytes() == a.lower.tobytes() and e.upper.tobytes() == a.upper.tobytes()


@pytest.mark.slow
def test_envelope_covers_theory():
    t = np.linspace(0, 0.2, 21)
    gen = lambda s: simulate_homogeneous(100, UNIT, s)
    hits = 0
    for rep in range(20):
        env = envelope(gen, 100, t, seed=derive_seed(11, rep))
        hits += bool(np.all((env.lower <= np.pi * t**2) & (np.pi * t**2 <= env.upper)))
    assert hits >= 19


def test_envelope_shrinks_with_rate():
    t = np.linspace(0, 0.2, 11)
    widths = {}
    for rate in (100, 400):
        widths[rate] = np.mean(
            [envelope(lambda s: simulate_homogeneous(rate, UNIT, s), 20, t, seed=derive_seed(rep, rate)).width.mean() for rep in range(20)]
        )
    assert widths[400] < widths[100]


def _fake(values, lower, upper):
    t = np.linspace(0, 1, len(values))
    return KFunction(t, np.asarray(values, float), "naive"), Envelope(t, np.asarray(lower, float), np.asarray(upper, float), 2)


def test_classify_rules():
    n = 20
    lo, hi = np.zeros(n), np.ones(n)
    obs = np.full(n, 0.5)
    k, e = _fake(obs, lo, hi)
    assert classify(k, e)[1] == "consistent"
    obs2 = obs.copy()
    obs2[1:4] = -1
    k, e = _fake(obs2, lo, hi)
    d, v = classify(k, e)
    assert v == "repulsion" and d[1:4] == ["below"] * 3
    obs3 = obs.copy()
    obs3[1:3] = -1  # only two in a row
    obs3[12:16] = -1  # outside the lowest quarter
    assert classify(*_fake(obs3, lo, hi))[1] == "consistent"
    obs4 = obs.copy()
    obs4[0:3] = 2
    obs4[3:6] = -1  # a later run in the other direction does not override
    assert classify(*_fake(obs4, lo, hi))[1] == "clustering"


def test_csr_constant_field_consistent():
    f = constant_field(100.0, UNIT)
    verdicts = [csr_test(simulate_homogeneous(100, UNIT, s), f, n_sims=100, seed=s).verdict for s in range(20)]
    assert verdicts.count("consistent") >= 18


def test_csr_duplicates_cluster():
    f = constant_field(200.0, UNIT)
    p = simulate_homogeneous(100, UNIT, 5)
    doubled = PointPattern(UNIT, np.vstack([p.points, p.points]))
    # homogenization with a constant field keeps every point
    rep = csr_test(doubled, f, n_sims=49, seed=1)
    assert rep.n_thinned == len(doubled)
    assert rep.verdict == "clustering"
    js = rep.to_json()
    assert js["verdict"] == "clustering" and len(js["t"]) == 50


def test_csr_over_thinned():
    # rho_min / rho = 0.01 nearly everywhere
    from conftest import grid_field

    f = grid_field(lambda xy: np.where(xy[:, 0] < 0.05, 1.0, 100.0), UNIT, 21)
    with pytest.raises(OverThinnedError, match="over-thinned"):
        csr_test(simulate_homogeneous(100, UNIT, 0), f)


def test_pointwise_exit_rate_matches_rank_law():
    # observed and simulated curves are exchangeable: at a single t the
    # observed curve is the strict extreme of n_sims + 1 curves w.p. <= 2 / (n_sims + 1)
    t = np.array([0.0, 0.1])
    exits = 0
    reps = 300
    for rep in range(reps):
        obs = k_ripley(simulate_homogeneous(100, UNIT, derive_seed(8, "o", rep)), t).values[1]
        env = envelope(lambda s: simulate_homogeneous(100, UNIT, s), 19, t, seed=derive_seed(8, "e", rep))
        exits += not (env.lower[1] <= obs <= env.upper[1])
    # expected rate 0.1; binomial sd over 300 reps ~ 0.017
    assert 0.1 - 0.06 < exits / reps < 0.1 + 0.06
