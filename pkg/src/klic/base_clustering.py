"""Base clusterers: k-means and average-linkage hierarchical clustering.

Both are deterministic given their inputs (and seed, for k-means) so that
the resampling layers above them are bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np

from ._seeds import rng_for
from .data_model import Partition, _freeze, relabel_first_appearance


@dataclass(frozen=True)
class Dendrogram:
    """UPGMA merge tree.

    Nodes 0..N-1 are leaves; merge step i creates node N+i. ``merges`` holds
    (left, right, height) triples with non-decreasing heights.
    """

    merges: tuple
    n_leaves: int

    def __post_init__(self):
        if len(self.merges) != self.n_leaves - 1:
            raise ValueError("a dendrogram over N leaves has N-1 merges")
        prev = 0.0
        seen = set()
        for left, right, height in self.merges:
            if height < prev - 1e-12:
                raise ValueError("merge heights must be non-decreasing")
            prev = max(prev, height)
            for node in (left, right):
                if node in seen:
                    raise ValueError(f"node {node} merged twice")
                seen.add(node)


@dataclass(frozen=True)
class KMeansResult:
    partition: Partition
    centroids: np.ndarray
    inertia: float
    iterations: int

    def __post_init__(self):
        object.__setattr__(self, "centroids", _freeze(np.asarray(self.centroids, dtype=float)))


def _kmeans_pp_init(data, k, rng):
    n = data.shape[0]
    centers = np.empty((k, data.shape[1]))
    centers[0] = data[rng.integers(n)]
    d2 = ((data - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = data[idx]
        np.minimum(d2, ((data - centers[j]) ** 2).sum(axis=1), out=d2)
    return centers


def _lloyd(data, k, rng, max_iter):
    n = data.shape[0]
    centers = _kmeans_pp_init(data, k, rng)
    assign = np.full(n, -1)
    prev_inertia = np.inf
    for it in range(1, max_iter + 1):
        d2 = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        # keep k clusters non-empty: move the globally farthest point into
        # each empty cluster in turn
        counts = np.bincount(new_assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            dist_own = d2[np.arange(n), new_assign].copy()
            dist_own[counts[new_assign] <= 1] = -np.inf
            victim = int(dist_own.argmax())
            counts[new_assign[victim]] -= 1
            new_assign[victim] = empty
            counts[empty] += 1
        inertia = d2[np.arange(n), new_assign].sum()
        if inertia > prev_inertia * (1 + 1e-9) + 1e-12:
            raise RuntimeError("k-means inertia increased across iterations")
        if (new_assign == assign).all():
            break
        assign = new_assign
        prev_inertia = inertia
        for j in range(k):
            centers[j] = data[assign == j].mean(axis=0)
    # final inertia against the final centroids
    d2 = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(d2[np.arange(n), assign].sum())
    return assign, centers, inertia, it


def kmeans(data, k, seed=0, restarts=10, max_iter=100):
    """Best-of-``restarts`` Lloyd k-means with k-means++ initialisation.

    Deterministic given ``seed``; each restart draws from its own derived
    seed so a longer restart schedule extends (never reshuffles) a shorter
    one. Labels are renumbered in order of first appearance.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if not np.isfinite(data).all():
        raise ValueError("k-means input contains non-finite values")
    if k > n:
        raise ValueError(f"k={k} exceeds number of observations {n}")
    if k < 2:
        raise ValueError("k must be >= 2")
    best = None
    for r in range(restarts):
        rng = rng_for(seed, "restart", r)
        assign, centers, inertia, iters = _lloyd(data, k, rng, max_iter)
        if best is None or inertia < best[2]:
            best = (assign, centers, inertia, iters)
    assign, centers, inertia, iters = best
    labels, k_eff = relabel_first_appearance(assign)
    # reorder centroids to the first-appearance labelling
    order = np.empty(k, dtype=int)
    for old in range(k):
        where = np.flatnonzero(assign == old)
        order[labels[where[0]] - 1] = old
    return KMeansResult(Partition(labels, k), centers[order], inertia, iters)


def hclust_average(dissimilarity):
    """Average-linkage (UPGMA) agglomerative clustering.

    Ties are broken towards the lexicographically smallest (i, j) node pair,
    which makes the merge sequence bit-reproducible.
    """
    d = np.asarray(dissimilarity, dtype=float)
    n = d.shape[0]
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("dissimilarity must be square")
    if np.abs(d - d.T).max() > 1e-10:
        raise ValueError("dissimilarity must be symmetric")
    if np.abs(np.diag(d)).max() > 1e-12:
        raise ValueError("dissimilarity must have zero diagonal")
    if d.min() < 0:
        raise ValueError("dissimilarity must be nonnegative")

    d = d.copy()
    node = list(range(n))        # node id of each active slot
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    np.fill_diagonal(d, np.inf)
    d[~active] = np.inf
    merges = []
    for step in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], d, np.inf)
        dmin = masked.min()
        # smallest (node_i, node_j) among minimal-distance pairs
        pairs = np.argwhere(masked <= dmin)
        best = None
        for a, b in pairs:
            if a >= b:
                continue
            key = (min(node[a], node[b]), max(node[a], node[b]))
            if best is None or key < best[0]:
                best = (key, a, b)
        _, a, b = best
        merges.append((min(node[a], node[b]), max(node[a], node[b]), float(dmin)))
        # slot a becomes the merged cluster; average-linkage update
        new_row = (size[a] * d[a] + size[b] * d[b]) / (size[a] + size[b])
        d[a] = new_row
        d[:, a] = new_row
        d[a, a] = np.inf
        size[a] += size[b]
        active[b] = False
        node[a] = n + step
    return Dendrogram(tuple(merges), n)


def _merge_members(dendrogram):
    """Member leaf lists for every internal node, in merge order."""
    n = dendrogram.n_leaves
    members = {i: [i] for i in range(n)}
    out = []
    for step, (left, right, height) in enumerate(dendrogram.merges):
        a, b = members.pop(left), members.pop(right)
        out.append((a, b, height))
        members[n + step] = a + b
    return out


def cut_dendrogram(dendrogram, k):
    """Partition obtained by undoing the k-1 highest merges."""
    n = dendrogram.n_leaves
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range 1..{n}")
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    n_merges = n - k
    members = {i: i for i in range(n)}
    for step, (left, right, _h) in enumerate(dendrogram.merges[:n_merges]):
        ra, rb = find(members[left]), find(members[right])
        parent[rb] = ra
        members[n + step] = ra
    for step in range(n_merges, n - 1):
        left, right, _h = dendrogram.merges[step]
        members[n + step] = members[left]  # representative only; not united
    roots = [find(i) for i in range(n)]
    labels, k_eff = relabel_first_appearance(np.array(roots))
    return Partition(labels, k)


def cophenetic_distances(dendrogram):
    """Matrix of heights at which each pair of leaves first joins."""
    n = dendrogram.n_leaves
    eta = np.zeros((n, n))
    for left_members, right_members, height in _merge_members(dendrogram):
        eta[np.ix_(left_members, right_members)] = height
        eta[np.ix_(right_members, left_members)] = height
    return eta
