"""Intensity estimation: homogeneous MLE, Gaussian kernel estimator, LOO
bandwidth selection, and harmonic extension of a gridded intensity."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from scipy.spatial.distance import cdist

from .core import PointPattern, Window
from .errors import AntgenError, DegenerateFieldWarning, InsufficientDataError

__all__ = [
    "KernelConfig",
    "IntensityField",
    "RiskCurve",
    "estimate_homogeneous",
    "kernel_intensity",
    "loo_risk",
    "select_bandwidth",
    "default_bandwidths",
    "fit_field",
    "harmonic_extension",
    "evaluate",
]

logger = logging.getLogger(__name__)

_CHUNK = 256


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth ``bandwidth`` (same units as the coordinates) of an isotropic
    bivariate Gaussian kernel."""

    bandwidth: float
    kernel: str = "gaussian"

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.kernel != "gaussian":
            raise ValueError(f"unsupported kernel {self.kernel!r}")


@dataclass(frozen=True)
class RiskCurve:
    bandwidths: np.ndarray
    risks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bandwidths, dtype=float)
        r = np.asarray(self.risks, dtype=float)
        if b.shape != r.shape or b.ndim != 1:
            raise ValueError("bandwidths and risks must be 1-d and of equal length")
        if np.any(b <= 0) or np.any(np.diff(b) <= 0):
            raise ValueError("bandwidths must be positive and strictly increasing")
        object.__setattr__(self, "bandwidths", b)
        object.__setattr__(self, "risks", r)

    @property
    def best(self) -> float:
        return float(self.bandwidths[int(np.argmin(self.risks))])


@dataclass(frozen=True)
class IntensityField:
    """Nonnegative intensity sampled at the m x m grid-line intersections of ``box``.

    ``values[i, j]`` sits at ``(xs[j], ys[i])``: ``i`` runs along y, ``j``
    along x. ``fixed_mask`` marks nodes whose value is data-constrained.
    """

    box: Window
    values: np.ndarray
    fixed_mask: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 2:
            raise ValueError(f"values must be an m x m array with m >= 2, got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("intensity values must be finite and nonnegative")
        mask = np.array(self.fixed_mask, dtype=bool, copy=True)
        if mask.shape != v.shape:
            raise ValueError("fixed_mask shape must match values")
        v.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "fixed_mask", mask)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.box.a, self.box.b, self.m)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.box.c, self.box.d, self.m)

    @property
    def spacing(self) -> tuple[float, float]:
        return self.box.width / (self.m - 1), self.box.height / (self.m - 1)

    def nodes(self) -> np.ndarray:
        """(m*m, 2) node coordinates in row-major (i, j) order."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])

    def nearest_index(self, xy) -> tuple[np.ndarray, np.ndarray]:
        """Row/column of the nearest node; exact ties go to the lower index."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        hx, hy = self.spacing
        tx = (xy[:, 0] - self.box.a) / hx
        ty = (xy[:, 1] - self.box.c) / hy
        j = np.clip(np.ceil(tx - 0.5), 0, self.m - 1).astype(np.int64)
        i = np.clip(np.ceil(ty - 0.5), 0, self.m - 1).astype(np.int64)
        return i, j

    def __call__(self, xy, bilinear: bool = False) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if not bilinear:
            i, j = self.nearest_index(xy)
            return self.values[i, j]
        hx, hy = self.spacing
        tx = np.clip((xy[:, 0] - self.box.a) / hx, 0, self.m - 1)
        ty = np.clip((xy[:, 1] - self.box.c) / hy, 0, self.m - 1)
        j0 = np.minimum(np.floor(tx).astype(int), self.m - 2)
        i0 = np.minimum(np.floor(ty).astype(int), self.m - 2)
        fx, fy = tx - j0, ty - i0
        v = self.values
        return (
            v[i0, j0] * (1 - fx) * (1 - fy)
            + v[i0, j0 + 1] * fx * (1 - fy)
            + v[i0 + 1, j0] * (1 - fx) * fy
            + v[i0 + 1, j0 + 1] * fx * fy
        )

    def block_covering(self, window: Window) -> np.ndarray:
        """Values of every node that is the nearest node of some point of ``window``."""
        i, j = self.nearest_index([[window.a, window.c], [window.b, window.d]])
        return self.values[i[0] : i[1] + 1, j[0] : j[1] + 1]

    def max_value(self) -> float:
        return float(self.values.max())

    def integral(self, window: Window | None = None, n: int = 400) -> float:
        """Midpoint-rule integral of the nearest-node field over ``window``."""
        w = self.box if window is None else window
        xs = w.a + (np.arange(n) + 0.5) * w.width / n
        ys = w.c + (np.arange(n) + 0.5) * w.height / n
        X, Y = np.meshgrid(xs, ys)
        vals = self(np.column_stack([X.ravel(), Y.ravel()]))
        return float(vals.sum() * w.area / n**2)


def estimate_homogeneous(pattern: PointPattern) -> float:
    """Maximum-likelihood intensity N / area."""
    return len(pattern) / pattern.window.area


def _gaussian(sqdist: np.ndarray, b: float) -> np.ndarray:
    return np.exp(-0.5 * sqdist / b**2) / (2.0 * np.pi * b**2)


def kernel_intensity(pattern: PointPattern, config: KernelConfig, query):
    """Gaussian kernel estimate sum_z k_b(query - z).

    ``query`` may be a single point ``(x, y)`` (returns a float) or an
    ``(q, 2)`` array (returns an array of length q).
    """
    q = np.asarray(query, dtype=float)
    scalar = q.ndim == 1
    q = q.reshape(-1, 2)
    out = np.zeros(len(q))
    pts = pattern.points
    if len(pts):
        for s in range(0, len(pts), _CHUNK):
            out += _gaussian(cdist(q, pts[s : s + _CHUNK], "sqeuclidean"), config.bandwidth).sum(axis=1)
    return float(out[0]) if scalar else out


def _quadrature_grid(window: Window, b: float, n_quad: int, margin: float):
    w = window.inflate(margin * b)
    hx, hy = w.width / n_quad, w.height / n_quad
    xs = w.a + (np.arange(n_quad) + 0.5) * hx
    ys = w.c + (np.arange(n_quad) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()]), hx * hy


def loo_risk(
    pattern: PointPattern,
    config: KernelConfig,
    n_quad: int = 128,
    margin: float = 4.0,
    literal: bool = False,
) -> float:
    """Leave-one-out cross-validated estimate of the L2 risk
    ``||rho_b||^2 - 2 int rho rho_b``.

    The default estimate is ``mean_z ||rho_b^z||^2 - 2 sum_z rho_b^z(z)``
    where ``rho_b^z`` is the estimate built without ``z``; the sum over the
    points is an unbiased estimate of ``int rho rho_b`` for a Poisson
    process. ``literal=True`` averages the cross term as well,
    ``mean_z [||rho_b^z||^2 - 2 rho_b^z(z)]``, which is only scale-consistent
    for normalised densities and drifts to the largest bandwidth on
    intensity data.

    Squared L2 norms use a midpoint rule on an ``n_quad`` x ``n_quad`` grid
    over the window inflated by ``margin * bandwidth`` per side.
    """
    n = len(pattern)
    if n < 2:
        raise InsufficientDataError(f"insufficient data: loo_risk needs >= 2 points, got {n}")
    b = config.bandwidth
    pts = pattern.points
    grid, dA = _quadrature_grid(pattern.window, b, n_quad, margin)

    total = np.zeros(len(grid))
    for s in range(0, n, _CHUNK):
        total += _gaussian(cdist(grid, pts[s : s + _CHUNK], "sqeuclidean"), b).sum(axis=1)
    total_sq = float(total @ total)
    norms = np.empty(n)
    for s in range(0, n, _CHUNK):
        K = _gaussian(cdist(grid, pts[s : s + _CHUNK], "sqeuclidean"), b)
        # ||total - K_z||^2 expanded column-wise
        norms[s : s + K.shape[1]] = (total_sq - 2.0 * (total @ K) + np.einsum("gk,gk->k", K, K)) * dA

    cross = np.empty(n)
    for s in range(0, n, _CHUNK):
        P = _gaussian(cdist(pts[s : s + _CHUNK], pts, "sqeuclidean"), b)
        rows = np.arange(P.shape[0])
        P[rows, s + rows] = 0.0
        cross[s : s + P.shape[0]] = P.sum(axis=1)
    if literal:
        return float(np.mean(norms - 2.0 * cross))
    return float(np.mean(norms) - 2.0 * np.sum(cross))


def default_bandwidths(window: Window, num: int = 20) -> np.ndarray:
    """Geometric grid from diam/100 to diam."""
    d = window.diameter
    return np.geomspace(d / 100.0, d, num)


def select_bandwidth(pattern: PointPattern, candidates, **risk_kw) -> tuple[float, RiskCurve]:
    """Return the candidate with the smallest LOO risk (first on ties) and the risk curve."""
    cands = np.asarray(candidates, dtype=float).ravel()
    if len(cands) < 2:
        raise ValueError("select_bandwidth needs at least 2 candidate bandwidths")
    if np.any(cands <= 0) or np.any(np.diff(cands) <= 0):
        raise ValueError("candidates must be positive and strictly increasing")
    risks = np.array([loo_risk(pattern, KernelConfig(float(b)), **risk_kw) for b in cands])
    curve = RiskCurve(cands, risks)
    return curve.best, curve


def fit_field(pattern: PointPattern, config: KernelConfig, box: Window, m: int) -> IntensityField:
    """Evaluate the kernel estimate at the m x m nodes of ``box``.

    Nodes inside the pattern's window are marked fixed.
    """
    if m < 2:
        raise ValueError(f"grid resolution m must be >= 2, got {m}")
    if not box.contains_window(pattern.window):
        raise AntgenError("field box must contain the pattern window")
    xs = np.linspace(box.a, box.b, m)
    ys = np.linspace(box.c, box.d, m)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    values = kernel_intensity(pattern, config, nodes).reshape(m, m)
    mask = pattern.window.contains(nodes).reshape(m, m)
    return IntensityField(box, values, mask)


@numba.njit(cache=True)
def _gauss_seidel_laplace(u, free, tol, max_sweeps):
    m = u.shape[0]
    res = 0.0
    for sweep in range(1, max_sweeps + 1):
        for i in range(1, m - 1):
            for j in range(1, m - 1):
                if free[i, j]:
                    u[i, j] = 0.25 * (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1])
        res = 0.0
        for i in range(1, m - 1):
            for j in range(1, m - 1):
                if free[i, j]:
                    r = abs(u[i, j] - 0.25 * (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1]))
                    if r > res:
                        res = r
        if res <= tol:
            return sweep, res
    return max_sweeps, res


def harmonic_extension(
    field: IntensityField,
    rtol: float = 1e-8,
    max_sweeps: int = 1_000_000,
) -> IntensityField:
    """Fill non-fixed nodes with the discrete harmonic interpolant.

    Fixed nodes keep their values, the outermost ring of nodes is clamped to
    zero, and every remaining node ends up equal to the mean of its four
    neighbours up to ``rtol * max(fixed values)``. Solved by Gauss-Seidel
    sweeps starting from the current values.
    """
    m = field.m
    boundary = np.zeros((m, m), dtype=bool)
    boundary[[0, -1], :] = True
    boundary[:, [0, -1]] = True
    fixed = field.fixed_mask & ~boundary
    if not fixed.any():
        warnings.warn(
            "harmonic extension without fixed nodes is identically zero",
            DegenerateFieldWarning,
            stacklevel=2,
        )
        return IntensityField(field.box, np.zeros((m, m)), fixed)

    vmax = float(field.values[fixed].max())
    u = np.array(field.values, dtype=float)
    u[boundary] = 0.0
    free = ~fixed & ~boundary
    u[free] = np.clip(u[free], 0.0, vmax)
    sweeps, res = _gauss_seidel_laplace(u, free, rtol * vmax, max_sweeps)
    if res > rtol * vmax:
        warnings.warn(
            f"harmonic extension stopped at {sweeps} sweeps with residual {res:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    logger.debug("harmonic extension: %d sweeps, residual %.3g", sweeps, res)
    return IntensityField(field.box, u, fixed)


def evaluate(field: IntensityField, query) -> float:
    """Nearest-node value at ``query``; raises if ``query`` is outside the box."""
    q = np.asarray(query, dtype=float).reshape(-1, 2)
    if not field.box.contains(q).all():
        raise AntgenError(f"query {tuple(q[0])} lies outside the field box")
    vals = field(q)
    return float(vals[0]) if np.asarray(query).ndim == 1 else vals
