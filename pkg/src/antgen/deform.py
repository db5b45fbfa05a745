"""Harmonic deformation of a Delaunay triangulation with Gaussian noise, and
the end-to-end synthetic antenna generator built on it."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numba
import numpy as np

from .core import LabeledPattern, PointPattern, Window
from .errors import AntgenError, InsufficientDataError, StageError
from .intensity import (
    IntensityField,
    KernelConfig,
    RiskCurve,
    default_bandwidths,
    fit_field,
    harmonic_extension,
    select_bandwidth,
)
from .simulate import derive_seed, simulate_inhomogeneous_reject
from .triangulate import DelaunayGraph, triangulate

__all__ = [
    "NoiseSpec",
    "DeformConfig",
    "DeformResult",
    "Diagnostics",
    "harmonic_deform",
    "dirichlet_energy",
    "generate_synthetic",
]

logger = logging.getLogger(__name__)

CONSTANT = "constant"
SQRT_INTENSITY = "sqrt_intensity"


@dataclass(frozen=True)
class NoiseSpec:
    """Per-coordinate noise standard deviation eps(x).

    ``constant``: eps(x) = scale * value. ``sqrt_intensity``: eps(x) =
    scale * sqrt(field(x)); with ``field=None`` the generator substitutes the
    intensity field it fits.
    """

    mode: str = CONSTANT
    value: float = 0.0
    field: IntensityField | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.mode not in (CONSTANT, SQRT_INTENSITY):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.value < 0 or self.scale < 0:
            raise ValueError("noise value and scale must be nonnegative")

    @classmethod
    def constant(cls, value: float, scale: float = 1.0) -> "NoiseSpec":
        return cls(CONSTANT, value=value, scale=scale)

    @classmethod
    def sqrt_intensity(cls, field: IntensityField | None = None, scale: float = 1.0) -> "NoiseSpec":
        return cls(SQRT_INTENSITY, field=field, scale=scale)

    def with_field(self, field: IntensityField) -> "NoiseSpec":
        if self.mode == SQRT_INTENSITY and self.field is None:
            return NoiseSpec(self.mode, self.value, field, self.scale)
        return self

    def __call__(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if self.mode == CONSTANT:
            return np.full(len(xy), self.scale * self.value)
        if self.field is None:
            raise AntgenError("sqrt_intensity noise needs an intensity field")
        return self.scale * np.sqrt(self.field(xy))


@dataclass(frozen=True)
class DeformConfig:
    k: float = 3.0
    max_sweeps: int = 1000
    noise: NoiseSpec = dc_field(default_factory=NoiseSpec)
    seed: int = 0
    atol: float = 1e-9

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")


class DeformResult(NamedTuple):
    pattern: PointPattern
    sweeps_used: int
    converged: bool
    n_clamped: int
    energy: list


@numba.njit(cache=True)
def _eps_at(x, y, mode, eps0, scale, fvals, fa, fc, fhx, fhy):
    if mode == 0:
        return scale * eps0
    m = fvals.shape[0]
    j = np.ceil((x - fa) / fhx - 0.5)
    i = np.ceil((y - fc) / fhy - 0.5)
    j = min(max(j, 0.0), m - 1.0)
    i = min(max(i, 0.0), m - 1.0)
    return scale * np.sqrt(fvals[int(i), int(j)])


@numba.njit(cache=True)
def _deform_sweep(pos, free_idx, indptr, indices, noise, mode, eps0, scale,
                  fvals, fa, fc, fhx, fhy, k, atol, box):
    done = True
    clamped = 0
    for r in range(free_idx.shape[0]):
        i = free_idx[r]
        mx = 0.0
        my = 0.0
        cnt = indptr[i + 1] - indptr[i]
        for p in range(indptr[i], indptr[i + 1]):
            q = indices[p]
            mx += pos[q, 0]
            my += pos[q, 1]
        mx /= cnt
        my /= cnt
        e_new = _eps_at(mx, my, mode, eps0, scale, fvals, fa, fc, fhx, fhy)
        nx = mx + e_new * noise[r, 0]
        ny = my + e_new * noise[r, 1]
        if nx < box[0] or nx > box[1] or ny < box[2] or ny > box[3]:
            clamped += 1
            nx = min(max(nx, box[0]), box[1])
            ny = min(max(ny, box[2]), box[3])
        thr = k * _eps_at(pos[i, 0], pos[i, 1], mode, eps0, scale, fvals, fa, fc, fhx, fhy)
        if thr <= 0.0:
            thr = atol
        dx = nx - pos[i, 0]
        dy = ny - pos[i, 1]
        if np.sqrt(dx * dx + dy * dy) > thr:
            done = False
        pos[i, 0] = nx
        pos[i, 1] = ny
    return done, clamped


def dirichlet_energy(positions, graph: DelaunayGraph) -> float:
    """Sum of squared edge lengths over the graph."""
    e = graph.edges()
    d = np.asarray(positions)[e[:, 0]] - np.asarray(positions)[e[:, 1]]
    return float(np.einsum("ij,ij->", d, d))


def harmonic_deform(
    labeled: LabeledPattern,
    graph: DelaunayGraph,
    config: DeformConfig,
    track_energy: bool = False,
) -> DeformResult:
    """Relocate free points to the barycentre of their Delaunay neighbours plus noise.

    Gauss-Seidel sweeps over the free points in index order. Each relocation
    draws N(barycentre, eps(barycentre)^2 I). A sweep in which every free point
    moved by at most ``k * eps(previous position)`` (or ``atol`` where that
    is zero) ends the iteration; otherwise it stops after ``max_sweeps`` with
    ``converged=False``. Fixed points are never touched, and free points that
    leave the pattern window are clamped back onto it. The adjacency is the
    one passed in and is not recomputed as points move.
    """
    pattern = labeled.pattern
    n = len(pattern)
    if graph.n != n:
        raise AntgenError(f"graph has {graph.n} vertices but pattern has {n} points")
    fixed = labeled.fixed
    if not fixed.any():
        raise AntgenError("unanchored deformation collapses: no fixed points")
    free_idx = np.flatnonzero(~fixed).astype(np.int64)
    deg = graph.degree()
    isolated = free_idx[deg[free_idx] == 0]
    if len(isolated):
        raise AntgenError(f"free vertex {int(isolated[0])} has no neighbours")

    noise = config.noise
    if noise.mode == SQRT_INTENSITY:
        if noise.field is None:
            raise AntgenError("sqrt_intensity noise needs an intensity field")
        f = noise.field
        fvals = np.ascontiguousarray(f.values)
        fa, fc = f.box.a, f.box.c
        fhx, fhy = f.spacing
        mode = 1
    else:
        fvals = np.zeros((2, 2))
        fa = fc = 0.0
        fhx = fhy = 1.0
        mode = 0

    w = pattern.window
    box = np.array([w.a, w.b, w.c, w.d])
    pos = np.array(pattern.points, dtype=float)
    rng = np.random.default_rng(config.seed)
    energy = [dirichlet_energy(pos, graph)] if track_energy else []
    converged = False
    clamped = 0
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        draws = rng.standard_normal((len(free_idx), 2))
        done, c = _deform_sweep(
            pos, free_idx, graph.indptr, graph.indices, draws, mode,
            float(noise.value), float(noise.scale), fvals, fa, fc, fhx, fhy,
            float(config.k), float(config.atol), box,
        )
        clamped += c
        if track_energy:
            energy.append(dirichlet_energy(pos, graph))
        if done:
            converged = True
            break
    if clamped:
        logger.info("harmonic_deform clamped %d relocations to the window", clamped)
    pos[fixed] = pattern.points[fixed]
    return DeformResult(PointPattern(w, pos), sweeps, converged, clamped, energy)


@dataclass
class Diagnostics:
    sweeps_used: int
    converged: bool
    n_free: int
    n_fixed: int
    bandwidth: float
    epsilon_mode: str
    seed: int
    n_clamped: int = 0
    n_synthetic: int = 0
    field: IntensityField | None = None
    risk_curve: RiskCurve | None = None
    initial: LabeledPattern | None = None
    deformed: LabeledPattern | None = None

    def to_json(self) -> dict:
        return {
            "sweeps_used": int(self.sweeps_used),
            "converged": bool(self.converged),
            "n_free": int(self.n_free),
            "n_fixed": int(self.n_fixed),
            "bandwidth": float(self.bandwidth),
            "epsilon_mode": self.epsilon_mode,
            "seed": int(self.seed),
            "n_clamped": int(self.n_clamped),
            "n_synthetic": int(self.n_synthetic),
        }


@contextmanager
def _stage(name):
    try:
        yield
    except StageError:
        raise
    except (AntgenError, ValueError) as exc:
        raise StageError(name, exc) from exc


def generate_synthetic(
    real_pattern: PointPattern,
    box_inflation: float | None = None,
    grid_m: int = 64,
    bandwidth="auto",
    config: DeformConfig | None = None,
    candidates=None,
) -> tuple[PointPattern, Diagnostics]:
    """Synthetic pattern mimicking ``real_pattern``.

    1. kernel intensity on the window S (LOO-selected bandwidth for "auto");
    2. harmonic extension to the box B = S inflated by ``box_inflation``
       (default a quarter of S's diameter) with zero on B's border;
    3. one PPP from the extended field over B: points in S are free, the
       rest are fixed anchors;
    4. Delaunay triangulation of the union;
    5. harmonic deformation;
    6. the deformed free points that lie in S are returned.
    """
    config = DeformConfig() if config is None else config
    if len(real_pattern) == 0:
        raise StageError("input", InsufficientDataError("real pattern is empty"))
    S = real_pattern.window
    margin = 0.25 * S.diameter if box_inflation is None else float(box_inflation)
    if not margin > 0:
        raise StageError("input", ValueError(f"box inflation must be positive, got {margin}"))
    B = S.inflate(margin)

    risk_curve = None
    with _stage("estimate"):
        if isinstance(bandwidth, str):
            if bandwidth != "auto":
                raise ValueError(f"bandwidth must be a number or 'auto', got {bandwidth!r}")
            cands = default_bandwidths(S) if candidates is None else candidates
            bw, risk_curve = select_bandwidth(real_pattern, cands)
        else:
            bw = float(bandwidth)
        fitted = fit_field(real_pattern, KernelConfig(bw), B, grid_m)

    with _stage("extend"):
        ext = harmonic_extension(fitted)

    with _stage("simulate"):
        sim = simulate_inhomogeneous_reject(ext, ext.max_value(), seed=derive_seed(config.seed, "simulate"))
        inside = S.contains(sim.points)
        pts = np.concatenate([sim.points[inside], sim.points[~inside]])
        n_free = int(inside.sum())
        n_fixed = len(pts) - n_free
        labeled = LabeledPattern(PointPattern(B, pts), np.arange(len(pts)) >= n_free)

    diag = Diagnostics(
        sweeps_used=0,
        converged=True,
        n_free=n_free,
        n_fixed=n_fixed,
        bandwidth=bw,
        epsilon_mode=config.noise.mode,
        seed=config.seed,
        field=ext,
        risk_curve=risk_curve,
        initial=labeled,
        deformed=labeled,
    )
    if n_free == 0:
        return PointPattern(S), diag

    with _stage("triangulate"):
        graph = triangulate(labeled.pattern)

    with _stage("deform"):
        dcfg = DeformConfig(
            k=config.k,
            max_sweeps=config.max_sweeps,
            noise=config.noise.with_field(ext),
            seed=derive_seed(config.seed, "deform"),
            atol=config.atol,
        )
        res = harmonic_deform(labeled, graph, dcfg)

    deformed = LabeledPattern(res.pattern, labeled.fixed)
    free_pts = res.pattern.points[:n_free]
    synthetic = PointPattern(S, free_pts[S.contains(free_pts)])
    diag.sweeps_used = res.sweeps_used
    diag.converged = res.converged
    diag.n_clamped = res.n_clamped
    diag.n_synthetic = len(synthetic)
    diag.deformed = deformed
    return synthetic, diag
