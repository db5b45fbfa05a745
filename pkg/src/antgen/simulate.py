"""Poisson point process simulation, location-dependent thinning and homogenization.

All randomness goes through :func:`numpy.random.default_rng` (PCG64) seeded
with a 64-bit integer; sub-streams come from :func:`derive_seed`.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .core import PointPattern, Window
from .errors import AntgenError, DominatingRateError, VanishingIntensityError
from .intensity import IntensityField

__all__ = [
    "derive_seed",
    "simulate_homogeneous",
    "simulate_inhomogeneous_grid",
    "simulate_inhomogeneous_reject",
    "thin",
    "homogenize",
]


def derive_seed(seed: int, *labels) -> int:
    """Deterministic 64-bit child seed from a parent seed and a label path."""
    key = ":".join([str(int(seed))] + [str(lab) for lab in labels]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


def simulate_homogeneous(rate: float, window: Window, seed) -> PointPattern:
    """Homogeneous PPP: N ~ Poisson(rate * area), then N uniform points."""
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate}")
    rng = _rng(seed)
    n = rng.poisson(rate * window.area)
    x = rng.uniform(window.a, window.b, n)
    y = rng.uniform(window.c, window.d, n)
    return PointPattern(window, np.column_stack([x, y]))


def simulate_inhomogeneous_grid(
    field: IntensityField,
    m_sim: int = 100,
    seed=0,
    midpoint: bool = False,
) -> PointPattern:
    """Piecewise-constant approximation on an m_sim x m_sim partition of ``field.box``.

    Each cell gets an independent homogeneous PPP whose rate is the field at
    the cell's lower-left corner (or its midpoint with ``midpoint=True``).
    Cells are visited row by row (y outer, x inner).
    """
    if m_sim < 1:
        raise ValueError(f"m_sim must be >= 1, got {m_sim}")
    rng = _rng(seed)
    box = field.box
    hx, hy = box.width / m_sim, box.height / m_sim
    off = 0.5 if midpoint else 0.0
    jj, ii = np.meshgrid(np.arange(m_sim), np.arange(m_sim))
    corners = np.column_stack(
        [box.a + (jj.ravel() + off) * hx, box.c + (ii.ravel() + off) * hy]
    )
    counts = rng.poisson(field(corners) * hx * hy)
    cell = np.repeat(np.arange(m_sim * m_sim), counts)
    n = len(cell)
    x = box.a + (jj.ravel()[cell] + rng.uniform(0.0, 1.0, n)) * hx
    y = box.c + (ii.ravel()[cell] + rng.uniform(0.0, 1.0, n)) * hy
    pts = np.column_stack([np.clip(x, box.a, box.b), np.clip(y, box.c, box.d)])
    return PointPattern(box, pts)


def simulate_inhomogeneous_reject(
    field: IntensityField,
    lmax: float,
    seed=0,
    window: Window | None = None,
    bilinear: bool = False,
) -> PointPattern:
    """Dominating homogeneous PPP at rate ``lmax`` thinned with field(x) / lmax.

    Simulates over ``window`` (default: the field's box).
    """
    top = field.max_value()
    if lmax < top:
        raise DominatingRateError(
            f"dominating rate too small: lmax={lmax} < field maximum {top}"
        )
    window = field.box if window is None else window
    rng = _rng(seed)
    base = simulate_homogeneous(lmax, window, rng)
    if len(base) == 0 or lmax == 0:
        return PointPattern(window)
    keep = rng.uniform(0.0, 1.0, len(base)) < field(base.points, bilinear=bilinear) / lmax
    return base.subset(keep)


def thin(pattern: PointPattern, p, seed) -> PointPattern:
    """Keep each point independently with probability p(x).

    ``p`` is a constant in [0, 1] or a callable mapping an (n, 2) array to n
    probabilities. Survivors keep their original order.
    """
    rng = _rng(seed)
    n = len(pattern)
    if callable(p):
        probs = np.asarray(p(pattern.points), dtype=float).reshape(-1) if n else np.empty(0)
    else:
        probs = np.full(n, float(p))
        if not 0.0 <= float(p) <= 1.0:
            raise AntgenError(f"retention probability {p} outside [0, 1]")
    if np.any(~np.isfinite(probs)) or np.any(probs < 0) or np.any(probs > 1):
        raise AntgenError("retention probability outside [0, 1]")
    keep = rng.uniform(0.0, 1.0, n) < probs
    return pattern.subset(keep)


def homogenize(
    pattern: PointPattern,
    field: IntensityField,
    seed,
    reciprocal: bool = False,
) -> tuple[PointPattern, float]:
    """Thin with p(x) = rho_min / field(x) so survivors form a PPP of rate rho_min.

    ``rho_min`` is the smallest node value reachable from the pattern's window.
    With ``reciprocal=True`` the unnormalised p(x) = 1 / field(x) is used
    instead, which requires field >= 1 on the window; the returned rate is 1.
    """
    block = field.block_covering(pattern.window)
    rho_min = float(block.min())
    if rho_min <= 0:
        raise VanishingIntensityError("intensity vanishes on window")
    if reciprocal:
        if rho_min < 1:
            raise AntgenError("reciprocal homogenization needs field >= 1 on the window")
        return thin(pattern, lambda xy: 1.0 / field(xy), seed), 1.0
    thinned = thin(pattern, lambda xy: np.minimum(rho_min / field(xy), 1.0), seed)
    return thinned, rho_min
