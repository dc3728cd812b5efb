"""Cluster-of-clusters analysis.

Per-dataset partitions are one-hot encoded into a Matrix Of Clusters (MOC,
items as rows), consensus clustering is run on the MOC rows, and the final
partition is obtained by cutting an average-linkage dendrogram built on
1 - consensus similarity.
"""

from dataclasses import dataclass, replace

import numpy as np

from .base_clustering import cut_dendrogram, hclust_average
from .consensus import consensus_matrix
from .data_model import Dataset, _freeze, require_aligned_ids
from .metrics import average_silhouette


@dataclass(frozen=True)
class MOCMatrix:
    """Binary items-by-clusters indicator matrix, columns grouped by dataset."""

    entries: np.ndarray
    column_labels: tuple  # (dataset index, cluster index within dataset)
    ids: tuple

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=int)
        if entries.shape != (len(self.ids), len(self.column_labels)):
            raise ValueError("MOC shape does not match ids/column labels")
        object.__setattr__(self, "entries", _freeze(entries))
        object.__setattr__(self, "column_labels", tuple(self.column_labels))
        object.__setattr__(self, "ids", tuple(self.ids))

    @property
    def n(self):
        return self.entries.shape[0]


def build_moc(partitions, ids):
    """One-hot encode M partitions of the same N items into a MOC matrix."""
    ids = tuple(ids)
    n = len(ids)
    blocks = []
    column_labels = []
    for m, part in enumerate(partitions, start=1):
        if part.n != n:
            raise ValueError(f"partition {m} has {part.n} items, expected {n}")
        block = np.zeros((n, part.k), dtype=int)
        block[np.arange(n), part.labels - 1] = 1
        blocks.append(block)
        column_labels.extend((m, k) for k in range(1, part.k + 1))
    return MOCMatrix(np.hstack(blocks), tuple(column_labels), ids)


def coca(moc, k_bar, cc):
    """Consensus-cluster the MOC rows and cut the resulting dendrogram.

    Returns the final partition and the consensus matrix it was read from.
    """
    if not (2 <= k_bar <= moc.n):
        raise ValueError(f"k_bar={k_bar} out of range 2..{moc.n}")
    data = Dataset(moc.entries.astype(float), moc.ids, name="moc")
    cons = consensus_matrix(data, replace(cc, k=k_bar))
    dissimilarity = 1.0 - cons.entries
    np.fill_diagonal(dissimilarity, 0.0)
    dissimilarity = np.clip(0.5 * (dissimilarity + dissimilarity.T), 0.0, None)
    partition = cut_dendrogram(hclust_average(dissimilarity), k_bar)
    return partition, cons


def select_kbar_silhouette(moc, k_range, cc):
    """Pick the global cluster count maximising the average silhouette.

    The silhouette is evaluated on the same dissimilarity (1 - consensus)
    that the final hierarchical clustering saw. Ties go to the smaller k.
    """
    k_range = sorted(set(k_range))
    if not k_range:
        raise ValueError("empty k range")
    best = None
    for k in k_range:
        partition, cons = coca(moc, k, cc)
        dissimilarity = 1.0 - cons.entries
        np.fill_diagonal(dissimilarity, 0.0)
        sil = average_silhouette(partition, 0.5 * (dissimilarity + dissimilarity.T))
        if best is None or sil > best[0]:
            best = (sil, k, partition)
    return best[1], best[2]
