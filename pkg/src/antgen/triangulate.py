"""Delaunay triangulation and the Voronoi-neighbour adjacency built from it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial import Delaunay, QhullError

from .core import PointPattern, has_duplicates
from .errors import DegenerateGeometryError

__all__ = ["DelaunayGraph", "triangulate", "neighbors", "barycenter"]


@dataclass(frozen=True)
class DelaunayGraph:
    """Symmetric adjacency (CSR ``indptr``/``indices``) plus the simplex list."""

    n: int
    simplices: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_simplices(cls, n: int, simplices) -> "DelaunayGraph":
        s = np.asarray(simplices, dtype=np.int64).reshape(-1, 3)
        # every simplex contributes its three undirected edges, both directions
        rows = np.concatenate([s[:, 0], s[:, 1], s[:, 0], s[:, 2], s[:, 1], s[:, 2]])
        cols = np.concatenate([s[:, 1], s[:, 0], s[:, 2], s[:, 0], s[:, 2], s[:, 1]])
        adj = sparse.coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n)).tocsr()
        adj.sum_duplicates()
        adj.sort_indices()
        indptr = adj.indptr.astype(np.int64)
        indices = adj.indices.astype(np.int64)
        for a in (s, indptr, indices):
            a.setflags(write=False)
        return cls(n, s, indptr, indices)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """(E, 2) array of undirected edges with i < j, sorted."""
        rows = np.repeat(np.arange(self.n), self.degree())
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def adjacency(self) -> sparse.csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def permuted(self, order) -> "DelaunayGraph":
        """Graph relabelled so that new vertex k is old vertex ``order[k]``."""
        order = np.asarray(order)
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        return DelaunayGraph.from_simplices(self.n, inv[self.simplices])


def triangulate(pattern: PointPattern) -> DelaunayGraph:
    """Delaunay triangulation of the pattern (Qhull, triangulated output).

    Cocircular ties are resolved by Qhull's triangulated output ("Qt"), which
    is deterministic for identical input.
    """
    n = len(pattern)
    if n < 3:
        raise DegenerateGeometryError(f"triangulation needs >= 3 points, got {n}")
    if has_duplicates(pattern):
        raise DegenerateGeometryError("triangulation input contains duplicate points")
    pts = pattern.points
    centred = pts - pts.mean(axis=0)
    scale = np.abs(centred).max()
    if np.linalg.matrix_rank(centred / scale, tol=1e-12) < 2:
        raise DegenerateGeometryError("all points are collinear")
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise DegenerateGeometryError(f"Qhull failed: {exc}") from exc
    if len(tri.coplanar):
        raise DegenerateGeometryError(
            f"{len(tri.coplanar)} near-coincident points were dropped by Qhull "
            f"(first index {int(tri.coplanar[0, 0])})"
        )
    return DelaunayGraph.from_simplices(n, tri.simplices)


def neighbors(graph: DelaunayGraph, i: int) -> np.ndarray:
    """Sorted indices adjacent to vertex ``i``."""
    if not 0 <= i < graph.n:
        raise IndexError(f"vertex {i} out of range for {graph.n} vertices")
    return graph.indices[graph.indptr[i] : graph.indptr[i + 1]]


def barycenter(positions, neighbor_set) -> np.ndarray:
    """Componentwise mean of ``positions[neighbor_set]``."""
    idx = np.asarray(list(neighbor_set), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("barycenter of an empty neighbour set")
    return np.asarray(positions, dtype=float)[idx].mean(axis=0)
