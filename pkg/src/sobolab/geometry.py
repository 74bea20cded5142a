"""Datasets and their nearest-neighbor geometry.

Provides exact nearest-neighbor radii (spatial index above a brute-force
cutoff, but always reduced with the same arithmetic so the two paths agree
to the bit), the directed nearest-neighbor graph with ties kept, the
half-radius packing check, and the one-point perturbation stability count.

All functions are pure; `Dataset` arrays are frozen after construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DuplicatePoints,
    MismatchedLengths,
    TooFewPoints,
    UnsupportedDimension,
)

# Brute force below this size; k-d tree above (DESIGN: correctness first,
# both paths must agree exactly).
BRUTE_FORCE_MAX_N = 64

# Kissing numbers tau(d): max in-degree of the NN graph on generic points.
KISSING_NUMBER = {1: 2, 2: 6, 3: 12}


def kissing_number(d):
    try:
        return KISSING_NUMBER[int(d)]
    except KeyError:
        raise UnsupportedDimension(
            f"kissing number table covers d in {{1, 2, 3}}, got d={d}"
        ) from None


def _sq_dists(a, b):
    """Squared distances with a fixed left-to-right component sum.

    Shared by the brute-force and tree paths so both produce identical bits.
    ``a``, ``b`` broadcast against each other with trailing axis d.
    """
    diff = a - b
    out = diff[..., 0] * diff[..., 0]
    for j in range(1, diff.shape[-1]):
        out = out + diff[..., j] * diff[..., j]
    return out


@dataclass(frozen=True)
class Dataset:
    """n >= 2 pairwise-distinct points in R^d with real labels."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float, order="C")
        labels = np.array(self.labels, dtype=float, order="C")
        if points.ndim != 2:
            raise MismatchedLengths("points must be an (n, d) array")
        if labels.shape != (points.shape[0],):
            raise MismatchedLengths(
                f"{points.shape[0]} points but {labels.shape} labels"
            )
        if points.shape[0] < 2:
            raise TooFewPoints(f"need n >= 2 points, got {points.shape[0]}")
        if not (np.isfinite(points).all() and np.isfinite(labels).all()):
            raise MismatchedLengths("points and labels must be finite")
        points.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        if np.min(self._nn_sq_dists()) == 0.0:
            raise DuplicatePoints("two points of the dataset coincide")

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def _nn_sq_dists(self):
        """Squared distance from each point to its nearest other point."""
        return _nn_sq_dists(self.points)


@dataclass(frozen=True)
class NnGraph:
    """Directed nearest-neighbor graph; ties produce parallel out-edges."""

    edges: frozenset
    n: int


def _nn_sq_dists_brute(points):
    d2 = _sq_dists(points[:, None, :], points[None, :, :])
    np.fill_diagonal(d2, np.inf)
    return d2.min(axis=1)


def _nn_sq_dists_tree(points, candidates=4):
    tree = cKDTree(points)
    k = min(candidates + 1, len(points))
    _, idx = tree.query(points, k=k)
    # Recompute candidate distances with the shared arithmetic; the tree is
    # only trusted to shortlist, never to produce the final number.
    cand = _sq_dists(points[:, None, :], points[idx])
    cand[idx == np.arange(len(points))[:, None]] = np.inf
    return cand.min(axis=1)


def _nn_sq_dists(points):
    if len(points) < BRUTE_FORCE_MAX_N:
        return _nn_sq_dists_brute(points)
    return _nn_sq_dists_tree(points)


def nn_radii(dataset):
    """delta_i = min_{l != i} ||x_i - x_l||, exactly, for every i."""
    r2 = dataset._nn_sq_dists()
    if np.min(r2) == 0.0:
        raise DuplicatePoints("two points of the dataset coincide")
    return np.sqrt(r2)


def nn_radii_brute_force(dataset):
    """O(n^2) oracle for nn_radii; bit-identical to the indexed path."""
    return np.sqrt(_nn_sq_dists_brute(dataset.points))


def nn_graph(dataset, block=512):
    """Edges (i, j) with ||x_j - x_i|| <= ||x_l - x_i|| for all l != i."""
    points = dataset.points
    n = dataset.n
    edges = []
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = _sq_dists(points[start:stop, None, :], points[None, :, :])
        for r in range(stop - start):
            d2[r, start + r] = np.inf
        rowmin = d2.min(axis=1)
        src, dst = np.nonzero(d2 == rowmin[:, None])
        edges.extend(zip((src + start).tolist(), dst.tolist()))
    return NnGraph(edges=frozenset(edges), n=n)


def in_degrees(graph, n=None):
    """In-degree of every node of the nearest-neighbor graph."""
    if n is None:
        n = graph.n
    deg = np.zeros(n, dtype=int)
    for _, j in graph.edges:
        deg[j] += 1
    return deg


def check_packing(dataset, radii, block=512):
    """All pairs violating ||x_i - x_j|| < (delta_i + delta_j) / 2.

    The half-radius balls B(x_i, delta_i/2) are disjoint whenever the radii
    come from the same dataset, so the returned list is empty by contract;
    a non-empty return means corrupted inputs.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.shape != (dataset.n,):
        raise MismatchedLengths(
            f"radii shape {radii.shape} does not match n={dataset.n}"
        )
    points = dataset.points
    n = dataset.n
    violations = []
    for start in range(0, n, block):
        stop = min(start + block, n)
        dist = np.sqrt(_sq_dists(points[start:stop, None, :], points[None, :, :]))
        limit = (radii[start:stop, None] + radii[None, :]) / 2.0
        bad = dist < limit
        for r in range(stop - start):
            bad[r, : start + r + 1] = False  # keep i < j only
        src, dst = np.nonzero(bad)
        violations.extend(zip((src + start).tolist(), dst.tolist()))
    return violations


def perturbation_changed_radii(dataset, index, replacement):
    """How many nearest-neighbor radii change when x_index moves.

    Bounded by 1 + 2 tau(d) for d <= 3: the moved point, plus the old and
    new in-neighborhoods.
    """
    replacement = np.asarray(replacement, dtype=float).reshape(-1)
    if replacement.shape != (dataset.dim,):
        raise MismatchedLengths(
            f"replacement has dim {replacement.shape[0]}, dataset d={dataset.dim}"
        )
    moved = dataset.points.copy()
    moved[index] = replacement
    others = np.delete(moved, index, axis=0)
    if np.min(_sq_dists(others, replacement[None, :])) == 0.0:
        raise DuplicatePoints("replacement coincides with another point")
    before = _nn_sq_dists(dataset.points)
    after = _nn_sq_dists(moved)
    return int(np.count_nonzero(before != after))


# -- CSV interchange -------------------------------------------------------


def save_dataset(dataset, path):
    """Write one row per point: columns x_1..x_d, y, header included."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{j + 1}" for j in range(dataset.dim)] + ["y"])
        for x, y in zip(dataset.points, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def load_dataset(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-1] != "y" or header[0] != "x_1":
            raise MismatchedLengths(
                f"{path}: expected header x_1,...,x_d,y, got {header}"
            )
        d = len(header) - 1
        pts, ys = [], []
        for row in reader:
            if len(row) != d + 1:
                raise MismatchedLengths(f"{path}: row width {len(row)} != {d + 1}")
            pts.append([float(v) for v in row[:d]])
            ys.append(float(row[d]))
    return Dataset(points=np.asarray(pts), labels=np.asarray(ys))
