"""Neighbourhood structures for Star, Ring and Von Neumann swarms.

A neighbourhood graph is stored as an ``(n, k)`` integer array: row ``i``
lists particle ``i``'s neighbours, itself first.  Ties are always resolved
towards the lower particle index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class NeighborhoodGraph:
    neighbors: np.ndarray
    static: bool = False

    @property
    def n_particles(self) -> int:
        return self.neighbors.shape[0]

    def lists(self) -> list[list[int]]:
        return [list(map(int, row)) for row in self.neighbors]


@lru_cache(maxsize=None)
def delannoy(m: int, n: int) -> int:
    """Number of lattice paths from (0, 0) to (m, n) with E, N and NE steps."""
    if m < 0 or n < 0:
        raise ValueError("delannoy is defined for non-negative arguments")
    if m == 0 or n == 0:
        return 1
    return delannoy(m - 1, n) + delannoy(m, n - 1) + delannoy(m - 1, n - 1)


def von_neumann_k(dim: int, r: int, n_particles: int) -> int:
    """Neighbourhood size for range ``r`` in ``dim`` dimensions, capped at the swarm size."""
    if dim < 1 or r < 0:
        raise ValueError("need dim >= 1 and r >= 0")
    return max(1, min(delannoy(dim, r), n_particles))


def star_neighbors(n_particles: int) -> NeighborhoodGraph:
    if n_particles < 1:
        raise ValueError("need at least one particle")
    # self first, then everyone else in index order
    idx = np.arange(n_particles)
    rows = np.array([np.concatenate(([i], np.delete(idx, i))) for i in idx])
    return NeighborhoodGraph(rows, static=True)


def minkowski_distances(positions: np.ndarray, p: int) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    if p == 1:
        return cdist(positions, positions, "cityblock")
    if p == 2:
        return cdist(positions, positions, "euclidean")
    return cdist(positions, positions, "minkowski", p=p)


def ring_neighbors(positions: np.ndarray, k: int, p: int, static: bool = False) -> NeighborhoodGraph:
    """``k`` nearest particles under the Minkowski ``p``-norm, self included."""
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    dist = minkowski_distances(positions, p)
    # coincident particles must not push a particle out of its own list
    np.fill_diagonal(dist, -1.0)
    if k > 8:
        order = np.argsort(dist, axis=1, kind="stable")
        return NeighborhoodGraph(order[:, :k], static=static)
    # small k: repeated argmin (first occurrence) matches a stable sort
    rows = np.arange(n)
    out = np.empty((n, k), dtype=np.intp)
    for j in range(k):
        pick = np.argmin(dist, axis=1)
        out[:, j] = pick
        dist[rows, pick] = np.inf
    return NeighborhoodGraph(out, static=static)


def local_best(graph: NeighborhoodGraph, pbest_values: np.ndarray) -> np.ndarray:
    """Index of the best personal best inside each neighbourhood."""
    nb = graph.neighbors
    values = np.asarray(pbest_values)
    if nb.shape[1] == nb.shape[0]:
        # fully connected: everyone follows the global best
        return np.full(nb.shape[0], int(np.argmin(values)))
    vals = np.asarray(pbest_values)[nb]
    # lexicographic (value, index): sort neighbour indices first so argmin picks the lowest
    order = np.argsort(nb, axis=1, kind="stable")
    nb_sorted = np.take_along_axis(nb, order, axis=1)
    vals_sorted = np.take_along_axis(vals, order, axis=1)
    pick = np.argmin(vals_sorted, axis=1)
    return nb_sorted[np.arange(nb.shape[0]), pick]


def write_edges(graph: NeighborhoodGraph, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["particle", "neighbor"])
        for i, row in enumerate(graph.neighbors):
            for j in row:
                w.writerow([i, int(j)])
