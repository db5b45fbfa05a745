"""CSV/JSON serialization of patterns, fields, K functions and reports.

Reals are written with 17 significant digits so float64 values round-trip
exactly. Every write goes to a temporary file that is then renamed.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .core import FIXED, FREE, LabeledPattern, PointPattern, Window
from .errors import PatternFileError
from .intensity import IntensityField, RiskCurve
from .stats import CsrReport, Envelope, KFunction
from .triangulate import DelaunayGraph

__all__ = [
    "read_pattern",
    "read_labeled",
    "write_pattern",
    "read_field",
    "write_field",
    "write_risk",
    "write_graph",
    "read_k",
    "write_k",
    "read_envelope",
    "write_envelope",
    "write_report",
    "write_json",
    "fmt",
]


def fmt(v) -> str:
    return format(float(v), ".17g")


@contextmanager
def _atomic(path, mode="w"):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None, **({} if "b" in mode else {"encoding": "utf-8"})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_rows(path, header, rows):
    try:
        with _atomic(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _read_rows(path):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise PatternFileError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise PatternFileError(f"{path}: empty file")
    return [c.strip() for c in rows[0]], rows[1:]


def _parse_float(cell, row, col):
    try:
        v = float(cell)
    except ValueError:
        raise PatternFileError(f"row {row}, column {col!r}: cannot parse {cell!r}") from None
    if not np.isfinite(v):
        raise PatternFileError(f"row {row}, column {col!r}: non-finite value {cell!r}")
    return v


def _auto_window(xy: np.ndarray) -> Window:
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    ext = hi - lo
    pad = np.where(ext > 0, 0.01 * ext, 0.01 * np.maximum(np.abs(lo), 1.0))
    return Window(lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])


def read_labeled(path, window="auto") -> LabeledPattern:
    """Read ``x,y[,label]``; a missing label column means every point is free."""
    header, rows = _read_rows(path)
    allowed = {"x", "y", "label"}
    unknown = [h for h in header if h not in allowed]
    if unknown:
        raise PatternFileError(f"row 1: unknown column {unknown[0]!r}")
    if "x" not in header or "y" not in header:
        raise PatternFileError("row 1: header must contain columns x and y")
    ix, iy = header.index("x"), header.index("y")
    il = header.index("label") if "label" in header else None
    if not rows:
        raise PatternFileError(f"{path}: no points")
    xy = np.empty((len(rows), 2))
    labels = []
    for k, r in enumerate(rows):
        rownum = k + 2
        if len(r) != len(header):
            raise PatternFileError(f"row {rownum}: expected {len(header)} fields, got {len(r)}")
        xy[k] = _parse_float(r[ix], rownum, "x"), _parse_float(r[iy], rownum, "y")
        if il is not None:
            lab = r[il].strip()
            if lab not in (FREE, FIXED):
                raise PatternFileError(f"row {rownum}, column 'label': {lab!r} is not free/fixed")
            labels.append(lab)
        else:
            labels.append(FREE)
    if isinstance(window, str):
        if window != "auto":
            raise ValueError(f"window must be a Window or 'auto', got {window!r}")
        window = _auto_window(xy)
    else:
        outside = np.flatnonzero(~window.contains(xy))
        if len(outside):
            k = int(outside[0])
            raise PatternFileError(f"row {k + 2}: point {tuple(xy[k])} outside window {window.as_tuple()}")
    return LabeledPattern.from_labels(PointPattern(window, xy), labels)


def read_pattern(path, window="auto") -> PointPattern:
    """Read a point CSV with header ``x,y`` (optionally ``label``).

    ``window="auto"`` takes the bounding box inflated by 1% of its extent on
    each side.
    """
    return read_labeled(path, window).pattern


def write_pattern(pattern, path):
    if isinstance(pattern, LabeledPattern):
        rows = ((fmt(x), fmt(y), lab) for (x, y), lab in zip(pattern.pattern.points, pattern.labels))
        _write_rows(path, ["x", "y", "label"], rows)
    else:
        _write_rows(path, ["x", "y"], ((fmt(x), fmt(y)) for x, y in pattern.points))


def write_field(field: IntensityField, path):
    m = field.m
    xs, ys = field.xs, field.ys
    rows = (
        (i, j, fmt(xs[j]), fmt(ys[i]), fmt(field.values[i, j]), int(field.fixed_mask[i, j]))
        for i in range(m)
        for j in range(m)
    )
    _write_rows(path, ["i", "j", "x", "y", "value", "fixed"], rows)


def read_field(path) -> IntensityField:
    header, rows = _read_rows(path)
    if header != ["i", "j", "x", "y", "value", "fixed"]:
        raise PatternFileError(f"row 1: bad field header {header}")
    m = int(round(np.sqrt(len(rows))))
    if m * m != len(rows) or m < 2:
        raise PatternFileError(f"{path}: {len(rows)} rows is not an m x m grid")
    values = np.empty((m, m))
    mask = np.empty((m, m), dtype=bool)
    xs = np.empty(m)
    ys = np.empty(m)
    for k, r in enumerate(rows):
        i, j = int(r[0]), int(r[1])
        xs[j] = _parse_float(r[2], k + 2, "x")
        ys[i] = _parse_float(r[3], k + 2, "y")
        values[i, j] = _parse_float(r[4], k + 2, "value")
        mask[i, j] = r[5].strip() == "1"
    return IntensityField(Window(xs[0], xs[-1], ys[0], ys[-1]), values, mask)


def write_risk(curve: RiskCurve, path):
    _write_rows(path, ["bandwidth", "risk"], ((fmt(b), fmt(r)) for b, r in zip(curve.bandwidths, curve.risks)))


def write_graph(graph: DelaunayGraph, path):
    _write_rows(path, ["i", "j"], (tuple(int(v) for v in e) for e in graph.edges()))


def write_k(kfun: KFunction, path):
    _write_rows(path, ["t", "value"], ((fmt(t), fmt(v)) for t, v in zip(kfun.t, kfun.values)))


def read_k(path, estimator="unknown") -> KFunction:
    header, rows = _read_rows(path)
    if header != ["t", "value"]:
        raise PatternFileError(f"row 1: bad K header {header}")
    arr = np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)
    return KFunction(arr[:, 0], arr[:, 1], estimator)


def write_envelope(env: Envelope, path):
    rows = ((fmt(t), fmt(lo), fmt(hi)) for t, lo, hi in zip(env.t, env.lower, env.upper))
    _write_rows(path, ["t", "lower", "upper"], rows)


def read_envelope(path, n_sims=0) -> Envelope:
    header, rows = _read_rows(path)
    if header != ["t", "lower", "upper"]:
        raise PatternFileError(f"row 1: bad envelope header {header}")
    arr = np.array([[float(c) for c in r] for r in rows]).reshape(-1, 3)
    return Envelope(arr[:, 0], arr[:, 1], arr[:, 2], n_sims)


def write_json(obj: dict, path):
    try:
        with _atomic(path) as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_report(report: CsrReport, path):
    write_json(report.to_json(), path)
