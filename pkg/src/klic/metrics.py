"""Evaluation metrics: adjusted Rand index, silhouette, cophenetic correlation."""

from dataclasses import dataclass

import numpy as np

from .base_clustering import cophenetic_distances, hclust_average
from .data_model import Partition, _freeze


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "counts", _freeze(np.asarray(self.counts, dtype=int)))

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)

    @property
    def total(self):
        return int(self.counts.sum())


def contingency_table(p1, p2):
    l1 = p1.labels if isinstance(p1, Partition) else np.asarray(p1, dtype=int)
    l2 = p2.labels if isinstance(p2, Partition) else np.asarray(p2, dtype=int)
    if l1.size != l2.size:
        raise ValueError("partitions have different lengths")
    k1, k2 = l1.max(), l2.max()
    counts = np.zeros((k1, k2), dtype=int)
    np.add.at(counts, (l1 - 1, l2 - 1), 1)
    return ContingencyTable(counts)


def _comb2(x):
    return x * (x - 1) / 2.0


def ari(p1, p2):
    """Hubert-Arabie adjusted Rand index between two partitions.

    Equals 1 for identical partitions (up to relabelling) and has
    expectation 0 under independent random labelings.
    """
    table = contingency_table(p1, p2)
    n = table.total
    sum_cells = _comb2(table.counts).sum()
    sum_rows = _comb2(table.row_sums).sum()
    sum_cols = _comb2(table.col_sums).sum()
    expected = sum_rows * sum_cols / _comb2(n)
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # both partitions are single-cluster (or otherwise degenerate)
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def average_silhouette(partition, dissimilarity):
    """Mean silhouette width of a partition under a dissimilarity matrix.

    s(i) = (b(i) - a(i)) / max(a(i), b(i)) with a(i) the mean within-cluster
    distance and b(i) the smallest mean distance to another cluster.
    Singleton clusters contribute s(i) = 0.
    """
    labels = partition.labels if isinstance(partition, Partition) else np.asarray(partition, dtype=int)
    d = np.asarray(dissimilarity, dtype=float)
    n = labels.size
    if d.shape != (n, n):
        raise ValueError("dissimilarity shape does not match partition")
    if np.abs(d - d.T).max() > 1e-10:
        raise ValueError("dissimilarity must be symmetric")
    if np.abs(np.diag(d)).max() > 1e-12:
        raise ValueError("dissimilarity must have zero diagonal")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette requires at least 2 non-empty clusters")
    masks = [labels == u for u in uniq]
    sizes = np.array([m.sum() for m in masks])
    # mean distance from each item to each cluster
    mean_to = np.stack([d[:, m].sum(axis=1) / m.sum() for m in masks], axis=1)
    s = np.zeros(n)
    for ci, mask in enumerate(masks):
        if sizes[ci] == 1:
            continue  # singleton: s(i) = 0
        a = mean_to[mask, ci] * sizes[ci] / (sizes[ci] - 1)  # exclude self
        others = np.delete(mean_to[mask], ci, axis=1)
        b = others.min(axis=1)
        denom = np.maximum(a, b)
        vals = np.zeros(a.size)  # a = b = 0 (coincident points): s(i) = 0
        np.divide(b - a, denom, out=vals, where=denom > 0)
        s[mask] = vals
    return float(s.mean())


def cophenetic_correlation(kernel):
    """Correlation between kernel-induced dissimilarities and dendrogram heights.

    Builds D = 1 - kernel, clusters it with average linkage, and returns the
    Pearson correlation between the pairwise dissimilarities and the heights
    at which each pair first merges. High values mean the hierarchical
    structure faithfully preserves the pairwise similarities.
    """
    entries = kernel.entries if hasattr(kernel, "entries") else np.asarray(kernel, dtype=float)
    d = 1.0 - entries
    np.fill_diagonal(d, 0.0)
    d = np.clip(d, 0.0, None)
    iu = np.triu_indices(d.shape[0], k=1)
    dv = d[iu]
    if dv.std() == 0:
        raise ValueError("degenerate input: all pairwise dissimilarities equal")
    dendrogram = hclust_average(d)
    ev = cophenetic_distances(dendrogram)[iu]
    if ev.std() == 0:
        raise ValueError("degenerate dendrogram: all merge heights equal")
    return float(np.corrcoef(dv, ev)[0, 1])
