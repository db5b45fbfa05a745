"""Static SVG figures: point patterns, K functions with envelopes, intensity
grids and bandwidth risk curves.

Output is byte-reproducible: no timestamp, fixed id salt, text kept as text.
"""

from functools import singledispatch

import matplotlib
import numpy as np
from matplotlib.colors import LogNorm, Normalize
from matplotlib.figure import Figure
from matplotlib.ticker import FuncFormatter, LogLocator

from .core import LabeledPattern, PointPattern
from .intensity import IntensityField, RiskCurve
from .stats import CsrReport, Envelope, KFunction

__all__ = ["plot_svg", "plot_k"]

_RC = {
    "svg.fonttype": "none",
    "svg.hashsalt": "antgen",
    "font.size": 9,
    "axes.linewidth": 0.8,
}

LOG_SPAN = 100.0


def _save(fig, path):
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _new(figsize=(5.0, 4.5)):
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=figsize)
        ax = fig.add_subplot()
    return fig, ax


@singledispatch
def plot_svg(artifact, path, **kw):
    """Render ``artifact`` to an SVG file at ``path``."""
    raise TypeError(f"cannot plot {type(artifact).__name__}")


@plot_svg.register
def _(artifact: PointPattern, path, title=None):
    _plot_points(artifact.window, artifact.points, np.zeros(len(artifact), dtype=bool), path, title)


@plot_svg.register
def _(artifact: LabeledPattern, path, title=None):
    _plot_points(artifact.pattern.window, artifact.pattern.points, artifact.fixed, path, title)


def _plot_points(window, pts, fixed, path, title):
    fig, ax = _new()
    if fixed.any():
        ax.scatter(pts[fixed, 0], pts[fixed, 1], s=4, c="0.65", lw=0, label="fixed", gid="points-fixed")
    if (~fixed).any():
        ax.scatter(pts[~fixed, 0], pts[~fixed, 1], s=4, c="k", lw=0, label="free", gid="points-free")
    ax.set_xlim(window.a, window.b)
    ax.set_ylim(window.c, window.d)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_k(observed: KFunction, env: Envelope, path, title=None):
    """Observed K, the Poisson reference pi t^2 (dashed) and the shaded envelope."""
    fig, ax = _new()
    ax.fill_between(env.t, env.lower, env.upper, color="0.8", lw=0, gid="envelope-band", label=f"envelope ({env.n_sims} sims)")
    ax.plot(observed.t, np.pi * observed.t**2, "k--", lw=1, gid="k-theoretical", label=r"$\pi t^2$")
    ax.plot(observed.t, observed.values, "k-", lw=1.2, gid="k-observed", label="observed")
    ax.set_xlabel("t")
    ax.set_ylabel("K(t)")
    ax.legend(frameon=False, loc="upper left")
    if title:
        ax.set_title(title)
    _save(fig, path)


@plot_svg.register
def _(artifact: tuple, path, title=None):
    observed, env = artifact
    plot_k(observed, env, path, title)


@plot_svg.register
def _(artifact: CsrReport, path, title=None):
    plot_k(artifact.observed, artifact.envelope, path, title or f"verdict: {artifact.verdict}")


def _pow10(v, _pos):
    return f"1e{int(round(np.log10(v)))}"


@plot_svg.register
def _(artifact: IntensityField, path, title=None):
    v = artifact.values
    positive = v[v > 0]
    log = positive.size > 0 and positive.max() / positive.min() >= LOG_SPAN
    fig, ax = _new((5.5, 4.5))
    if log:
        norm = LogNorm(vmin=positive.min(), vmax=positive.max())
        shown = np.ma.masked_less_equal(v, 0)
    else:
        norm = Normalize(vmin=0.0, vmax=max(float(v.max()), 1e-300))
        shown = v
    mesh = ax.pcolormesh(artifact.xs, artifact.ys, shown, norm=norm, shading="nearest", cmap="viridis", gid="field-grid")
    with matplotlib.rc_context(_RC):
        cb = fig.colorbar(mesh, ax=ax)
    cb.ax.set_gid("colorbar-log" if log else "colorbar-linear")
    if log:
        cb.ax.yaxis.set_major_locator(LogLocator(base=10))
        cb.ax.yaxis.set_major_formatter(FuncFormatter(_pow10))
        cb.ax.yaxis.set_minor_formatter(FuncFormatter(lambda *_: ""))
    cb.set_label("intensity")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    _save(fig, path)


@plot_svg.register
def _(artifact: RiskCurve, path, title=None):
    fig, ax = _new()
    ax.plot(artifact.bandwidths, artifact.risks, "k.-", lw=1, gid="risk-curve")
    ax.axvline(artifact.best, color="0.5", ls=":", lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("bandwidth b")
    ax.set_ylabel("estimated LOO risk")
    if title:
        ax.set_title(title)
    _save(fig, path)
