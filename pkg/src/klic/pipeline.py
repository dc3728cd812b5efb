"""End-to-end integrative clustering pipeline.

Per-dataset consensus matrices are treated as kernels and fused by multiple
kernel k-means across a grid of cluster counts; the number of clusters is
chosen by the average silhouette of each candidate clustering under the
distance induced by its final combined kernel.
"""

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from ._seeds import derive_seed
from .consensus import consensus_matrix
from .data_model import Partition, WeightState, require_aligned_ids, validate_kernel
from .metrics import average_silhouette
from .mkkm import MkkmResult, mkkm


@dataclass(frozen=True)
class KlicResult:
    best_k: int
    weights: WeightState
    partition: Partition
    silhouettes: dict
    per_k: dict


def kernel_distance(kernel):
    """Feature-space distance induced by a kernel:
    d_ij = sqrt(k_ii + k_jj - 2 k_ij)."""
    e = kernel.entries
    diag = np.diag(e)
    d2 = np.clip(diag[:, None] + diag[None, :] - 2 * e, 0.0, None)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def _content_digest(kernel):
    return hashlib.sha256(np.ascontiguousarray(kernel.entries).tobytes()).hexdigest()


def _reorder_weights(weights, inverse):
    theta = np.asarray(weights.theta)
    if weights.mode == "global":
        return WeightState("global", theta[inverse])
    return WeightState("localized", theta[:, inverse])


def klic_from_kernels(kernels, k_max, mode="localized", seed=0, k_values=None,
                      max_alternations=20, restarts=10):
    """Fuse pre-computed kernels and select the number of clusters.

    Kernels are processed in a canonical content-derived order (and the seed
    stream is derived from kernel content), so the result does not depend on
    the order in which the kernels are supplied. Reported weights are mapped
    back to the input order.
    """
    kernels = [validate_kernel(k.entries, k.ids) for k in kernels]
    require_aligned_ids(kernels)
    if k_values is None:
        if k_max < 2:
            raise ValueError("k_max must be >= 2 (silhouette is undefined at k=1)")
        k_values = range(2, k_max + 1)
    digests = [_content_digest(k) for k in kernels]
    order = sorted(range(len(kernels)), key=lambda i: (digests[i], i))
    inverse = np.argsort(order)
    sorted_kernels = [kernels[i] for i in order]
    content_key = "+".join(digests[i] for i in order)

    silhouettes = {}
    per_k = {}
    for k in k_values:
        run_seed = derive_seed(seed, "mkkm", k, content_key)
        result = mkkm(sorted_kernels, k, mode=mode, seed=run_seed,
                      max_alternations=max_alternations, restarts=restarts)
        result = replace(result, weights=_reorder_weights(result.weights, inverse))
        per_k[k] = result
        silhouettes[k] = average_silhouette(result.partition, kernel_distance(result.combined))

    best_k = None
    for k in sorted(silhouettes):
        if best_k is None or silhouettes[k] > silhouettes[best_k]:
            best_k = k
    best = per_k[best_k]
    return KlicResult(best_k, best.weights, best.partition, silhouettes, per_k)


def klic(datasets, k_max, cc, mode="localized", seed=0, per_dataset_k=None,
         max_alternations=20, restarts=10):
    """Full pipeline: consensus matrix per dataset, then kernel fusion.

    ``per_dataset_k`` overrides the consensus cluster count per dataset
    (defaults to ``cc.k`` for all); the kernels are computed once, not per
    candidate k.
    """
    require_aligned_ids(datasets)
    if per_dataset_k is None:
        per_dataset_k = [cc.k] * len(datasets)
    kernels = []
    for m, dataset in enumerate(datasets):
        config = replace(cc, k=per_dataset_k[m], seed=derive_seed(cc.seed, "consensus", m))
        kernels.append(consensus_matrix(dataset, config).kernel)
    return klic_from_kernels(kernels, k_max, mode=mode, seed=seed,
                             max_alternations=max_alternations, restarts=restarts)
