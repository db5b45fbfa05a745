"""Ripley's K function (naive and edge-corrected), min-max envelopes and the
thinning-based test of the Poisson hypothesis."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import PointPattern, Window
from .errors import AntgenError, InsufficientDataError, OverThinnedError
from .intensity import IntensityField
from .simulate import derive_seed, homogenize, simulate_homogeneous

__all__ = [
    "KFunction",
    "Envelope",
    "CsrReport",
    "disk_fraction",
    "circle_fraction",
    "default_t_grid",
    "k_naive",
    "k_ripley",
    "k_theoretical_poisson",
    "envelope",
    "classify",
    "csr_test",
]

INSIDE, ABOVE, BELOW = "inside", "above", "below"
CONSISTENT, CLUSTERING, REPULSION = "consistent", "clustering", "repulsion"


@dataclass(frozen=True)
class KFunction:
    t: np.ndarray
    values: np.ndarray
    estimator: str
    intensity: float | None = None
    n: int | None = None


@dataclass(frozen=True)
class Envelope:
    t: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_sims: int

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True)
class CsrReport:
    observed: KFunction
    envelope: Envelope
    exit_direction: list
    verdict: str
    rate: float
    n_points: int
    n_thinned: int
    seed: int

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "rate": self.rate,
            "n_points": self.n_points,
            "n_thinned": self.n_thinned,
            "n_sims": self.envelope.n_sims,
            "seed": self.seed,
            "t": self.observed.t.tolist(),
            "observed": self.observed.values.tolist(),
            "lower": self.envelope.lower.tolist(),
            "upper": self.envelope.upper.tolist(),
            "exit_direction": list(self.exit_direction),
        }


def default_t_grid(window: Window, num: int = 50) -> np.ndarray:
    return np.linspace(0.0, min(window.width, window.height) / 4.0, num)


def _check_t(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).ravel()
    if len(t) == 0 or t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be nonnegative and strictly increasing")
    return t


def _strip_integral(x, r):
    # integral of sqrt(r^2 - s^2) ds from 0 to x, for |x| <= r
    return 0.5 * (x * np.sqrt(np.maximum(r * r - x * x, 0.0)) + r * r * np.arcsin(np.clip(x / r, -1.0, 1.0)))


def _lower_left_area(a, b, r):
    """Area of the origin-centred disk of radius r within {x <= a, y <= b}."""
    a = np.clip(a, -r, r)
    bb = np.clip(b, -r, r)
    c = np.sqrt(np.maximum(r * r - bb * bb, 0.0))
    u = np.minimum(a, c)
    has = u > -c
    seg = np.where(has, _strip_integral(u, r) - _strip_integral(-c, r), 0.0)
    lin = np.where(has, u + c, 0.0)
    full = 2.0 * (_strip_integral(a, r) + _strip_integral(r, r))
    return np.where(bb >= 0, full - (seg - bb * lin), seg + bb * lin)


def disk_fraction(x, y, r, window: Window) -> np.ndarray:
    """Proportion of the area of the disk D((x, y), r) lying inside ``window``."""
    x, y, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, r)))
    rr = np.where(r > 0, r, 1.0)
    x1, x2 = window.a - x, window.b - x
    y1, y2 = window.c - y, window.d - y
    area = (
        _lower_left_area(x2, y2, rr)
        - _lower_left_area(x1, y2, rr)
        - _lower_left_area(x2, y1, rr)
        + _lower_left_area(x1, y1, rr)
    )
    frac = np.clip(area / (np.pi * rr * rr), 0.0, 1.0)
    return np.where(r > 0, frac, 1.0)


def circle_fraction(x, y, r, window: Window) -> np.ndarray:
    """Proportion of the circumference of the circle C((x, y), r) inside ``window``."""
    x, y, r = np.broadcast_arrays(*(np.asarray(v, dtype=float).ravel() for v in (x, y, r)))
    rr = np.where(r > 0, r, 1.0)
    angles = [np.zeros_like(x), np.full_like(x, 2 * np.pi)]
    for edge, centre, trig in ((window.a, x, "cos"), (window.b, x, "cos"), (window.c, y, "sin"), (window.d, y, "sin")):
        q = (edge - centre) / rr
        ok = np.abs(q) <= 1.0
        qc = np.clip(q, -1.0, 1.0)
        if trig == "cos":
            th1, th2 = np.arccos(qc), 2 * np.pi - np.arccos(qc)
        else:
            th1, th2 = np.arcsin(qc) % (2 * np.pi), np.pi - np.arcsin(qc)
        angles.append(np.where(ok, th1, 2 * np.pi))
        angles.append(np.where(ok, th2, 2 * np.pi))
    th = np.sort(np.column_stack(angles), axis=1)
    mid = 0.5 * (th[:, 1:] + th[:, :-1])
    px = x[:, None] + rr[:, None] * np.cos(mid)
    py = y[:, None] + rr[:, None] * np.sin(mid)
    inside = (px >= window.a) & (px <= window.b) & (py >= window.c) & (py <= window.d)
    frac = (np.diff(th, axis=1) * inside).sum(axis=1) / (2 * np.pi)
    return np.where(r > 0, frac, 1.0)


def _pairs(pattern: PointPattern, rmax: float):
    d = squareform(pdist(pattern.points))
    i, j = np.nonzero(d < rmax)
    keep = i != j
    return i[keep], j[keep], d[i[keep], j[keep]]


def _cumulative(t, r, weights):
    order = np.argsort(r, kind="stable")
    cs = np.concatenate([[0.0], np.cumsum(weights[order])])
    return cs[np.searchsorted(r[order], t, side="left")]


def k_naive(pattern: PointPattern, t_grid) -> KFunction:
    """(1 / (lambda n)) sum_i sum_{j != i} I(r_ij < t), lambda = n / area."""
    t = _check_t(t_grid)
    n = len(pattern)
    if n < 2:
        raise InsufficientDataError(f"K function needs >= 2 points, got {n}")
    lam = n / pattern.window.area
    _, _, r = _pairs(pattern, t[-1])
    vals = _cumulative(t, r, np.ones_like(r)) / (lam * n)
    return KFunction(t, vals, "naive", lam, n)


def k_ripley(pattern: PointPattern, t_grid, correction: str = "area") -> KFunction:
    """Edge-corrected K: each pair (i, j) weighted by 1 / w(x_i, r_ij).

    ``correction="area"`` uses the fraction of the disk D(x_i, r_ij) inside
    the window; ``"circumference"`` the classical fraction of its boundary
    circle (weights capped at 100).
    """
    t = _check_t(t_grid)
    n = len(pattern)
    if n < 2:
        raise InsufficientDataError(f"K function needs >= 2 points, got {n}")
    lam = n / pattern.window.area
    i, _, r = _pairs(pattern, t[-1])
    xi, yi = pattern.points[i, 0], pattern.points[i, 1]
    if correction == "area":
        w = disk_fraction(xi, yi, r, pattern.window)
        name = "ripley_corrected"
    elif correction == "circumference":
        w = np.maximum(circle_fraction(xi, yi, r, pattern.window), 0.01)
        name = "ripley_circumference"
    else:
        raise ValueError(f"unknown edge correction {correction!r}")
    vals = _cumulative(t, r, 1.0 / w) / (lam * n)
    return KFunction(t, vals, name, lam, n)


def k_theoretical_poisson(t_grid) -> KFunction:
    t = np.asarray(t_grid, dtype=float).ravel()
    return KFunction(t, np.pi * t**2, "theoretical_poisson")


_ESTIMATORS = {
    "ripley": k_ripley,
    "ripley_corrected": k_ripley,
    "naive": k_naive,
    "circumference": lambda p, t: k_ripley(p, t, correction="circumference"),
}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ANTGEN_THREADS", "1")))
    except ValueError:
        return 1


def envelope(generator, n_sims: int, t_grid, estimator="ripley", seed: int = 0, workers: int | None = None) -> Envelope:
    """Pointwise min/max of K over ``n_sims`` patterns from ``generator(seed)``.

    Replicate ``k`` uses ``derive_seed(seed, k, attempt)``; a replicate with
    fewer than 2 points is redrawn up to 10 times.
    """
    if n_sims < 2:
        raise ValueError(f"an envelope needs n_sims >= 2, got {n_sims}")
    t = _check_t(t_grid)
    est = _ESTIMATORS[estimator] if isinstance(estimator, str) else estimator

    def one(k):
        for attempt in range(10):
            pat = generator(derive_seed(seed, k, attempt))
            if len(pat) >= 2:
                return est(pat, t).values
        raise InsufficientDataError(f"replicate {k} produced < 2 points in 10 attempts")

    workers = _threads() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            curves = np.array(list(ex.map(one, range(n_sims))))
    else:
        curves = np.array([one(k) for k in range(n_sims)])
    return Envelope(t, curves.min(axis=0), curves.max(axis=0), n_sims)


def classify(observed: KFunction, env: Envelope, run: int = 3) -> tuple[list, str]:
    """Per-t exit direction and overall verdict.

    A verdict other than "consistent" needs ``run`` consecutive exits in the
    same direction among grid points with t in the lowest quarter of the
    grid's range; if both directions qualify the earlier run wins.
    """
    obs = observed.values
    direction = np.where(obs < env.lower, BELOW, np.where(obs > env.upper, ABOVE, INSIDE))
    t = observed.t
    low = t <= t[0] + 0.25 * (t[-1] - t[0])

    def first_run(kind):
        hit = (direction == kind) & low
        count = 0
        for idx, h in enumerate(hit):
            count = count + 1 if h else 0
            if count >= run:
                return idx - run + 1
        return None

    starts = {REPULSION: first_run(BELOW), CLUSTERING: first_run(ABOVE)}
    found = [(s, v) for v, s in starts.items() if s is not None]
    verdict = min(found)[1] if found else CONSISTENT
    return direction.tolist(), verdict


def csr_test(
    pattern: PointPattern,
    field: IntensityField,
    n_sims: int = 100,
    t_grid=None,
    seed: int = 0,
    min_points: int = 10,
) -> CsrReport:
    """Homogenize ``pattern`` with ``field`` and compare its edge-corrected K
    with a min-max envelope of homogeneous PPPs at the resulting rate."""
    t = default_t_grid(pattern.window) if t_grid is None else _check_t(t_grid)
    thinned, rate = homogenize(pattern, field, derive_seed(seed, "homogenize"))
    if len(thinned) < min_points:
        raise OverThinnedError(
            f"over-thinned; refine intensity or data ({len(thinned)} of {len(pattern)} points left)"
        )
    observed = k_ripley(thinned, t)
    window = pattern.window
    env = envelope(
        lambda s: simulate_homogeneous(rate, window, s),
        n_sims,
        t,
        "ripley",
        seed=derive_seed(seed, "envelope"),
    )
    direction, verdict = classify(observed, env)
    return CsrReport(observed, env, direction, verdict, rate, len(pattern), len(thinned), seed)
