"""Resampling-based consensus clustering.

Repeatedly subsample the observations (optionally also the features),
cluster each subsample, and average the co-clustering indicators over the
co-sampling counts. The resulting consensus matrix is used as a similarity
kernel downstream, so it is repaired to be positive semidefinite whenever
subsampling noise pushes its spectrum below zero (see ``consensus_matrix``).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._seeds import derive_seed, rng_for
from .base_clustering import kmeans
from .data_model import KernelMatrix, Partition, _freeze, validate_kernel

PSD_REPAIR_THRESHOLD = -1e-8


class InsufficientCoverageError(ValueError):
    """Some pair of observations was never sampled together."""


def kmeans_base_clusterer(restarts=10, max_iter=100):
    """The default base clusterer: Euclidean k-means labels."""

    def cluster(values, k, seed):
        return kmeans(values, k, seed=seed, restarts=restarts, max_iter=max_iter).partition.labels

    return cluster


@dataclass(frozen=True)
class ConsensusConfig:
    """Settings for one consensus-clustering run."""

    n_resamples: int = 1000
    item_fraction: float = 0.8
    feature_fraction: float = 1.0
    k: int = 3
    base_clusterer: object = field(default=None, compare=False)
    seed: int = 0

    def __post_init__(self):
        if self.n_resamples < 1:
            raise ValueError("n_resamples must be >= 1")
        for name in ("item_fraction", "feature_fraction"):
            f = getattr(self, name)
            if not (0 < f <= 1):
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.base_clusterer is None:
            object.__setattr__(self, "base_clusterer", kmeans_base_clusterer())

    def validate_against(self, n, p):
        if math.ceil(self.item_fraction * n) < self.k:
            raise ValueError("subsample size smaller than the number of clusters")


@dataclass(frozen=True)
class CoClusteringMatrix:
    """Binary connectivity matrix of one clustering over a subsample."""

    entries: np.ndarray
    included: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _freeze(np.asarray(self.entries, dtype=int)))
        object.__setattr__(self, "included", _freeze(np.asarray(self.included, dtype=int)))


@dataclass(frozen=True)
class ConsensusMatrix:
    """Consensus kernel plus the per-pair co-sampling counts."""

    kernel: KernelMatrix
    pair_counts: np.ndarray
    k: int

    def __post_init__(self):
        object.__setattr__(self, "pair_counts", _freeze(np.asarray(self.pair_counts, dtype=int)))

    @property
    def entries(self):
        return self.kernel.entries


def coclustering_matrix(partition, included):
    """C_ij = 1 iff i and j are both included and share a cluster label."""
    if isinstance(partition, Partition):
        labels = partition.labels
    else:
        labels = np.asarray(partition, dtype=int)
    included = np.asarray(included, dtype=bool)
    if included.shape != labels.shape:
        raise ValueError("included mask length does not match partition")
    same = labels[:, None] == labels[None, :]
    both = included[:, None] & included[None, :]
    return CoClusteringMatrix((same & both).astype(int), included.astype(int))


def consensus_matrix(data, config):
    """Run the resampling loop and return the consensus matrix.

    Entries are the elementwise ratio of co-clustering counts to co-sampling
    counts. With item subsampling that ratio can acquire slightly negative
    eigenvalues, so when the minimum eigenvalue falls below -1e-8 the matrix
    is shifted to (C + eps*I) / (1 + eps), which restores PSD while keeping
    the unit diagonal and the [0, 1] range. Matrices that are already PSD
    (e.g. item_fraction = 1) are returned untouched.
    """
    values = data.values
    n, p = values.shape
    config.validate_against(n, p)
    n_items = math.ceil(config.item_fraction * n)
    n_feats = math.ceil(config.feature_fraction * p)
    num = np.zeros((n, n))
    cnt = np.zeros((n, n), dtype=int)
    for h in range(config.n_resamples):
        rng = rng_for(config.seed, "resample", h)
        idx = np.sort(rng.choice(n, size=n_items, replace=False))
        if n_feats < p:
            cols = np.sort(rng.choice(p, size=n_feats, replace=False))
            sub = values[np.ix_(idx, cols)]
        else:
            sub = values[idx]
        labels = np.asarray(config.base_clusterer(sub, config.k, derive_seed(config.seed, "cluster", h)))
        co = labels[:, None] == labels[None, :]
        num[np.ix_(idx, idx)] += co
        cnt[np.ix_(idx, idx)] += 1
    if (cnt == 0).any():
        i, j = np.argwhere(cnt == 0)[0]
        raise InsufficientCoverageError(
            f"items {data.ids[i]!r} and {data.ids[j]!r} never sampled together; "
            f"increase n_resamples or item_fraction"
        )
    entries = num / cnt
    min_eig = np.linalg.eigvalsh(entries)[0]
    if min_eig < PSD_REPAIR_THRESHOLD:
        eps = -min_eig * (1 + 1e-6)
        entries = (entries + eps * np.eye(n)) / (1 + eps)
    kernel = validate_kernel(entries, data.ids, consensus=True)
    return ConsensusMatrix(kernel, cnt, config.k)


def select_k_monti(consensus_per_k, epsilon=0.1):
    """Pick the k whose consensus matrix is most nearly binary.

    Scores each candidate by the fraction of off-diagonal entries outside
    (epsilon, 1 - epsilon); ties go to the smaller k.
    """
    if not consensus_per_k:
        raise ValueError("no candidate consensus matrices")
    if not (0 < epsilon < 0.5):
        raise ValueError("epsilon must lie in (0, 0.5)")
    best_k, best_score = None, -1.0
    for k in sorted(consensus_per_k):
        entries = consensus_per_k[k].entries
        n = entries.shape[0]
        off = entries[~np.eye(n, dtype=bool)]
        score = float(np.mean((off <= epsilon) | (off >= 1 - epsilon)))
        if score > best_score:
            best_k, best_score = k, score
    return best_k
