"""Integrative consensus clustering: consensus matrices as kernels, fused by
(localized) multiple kernel k-means, with cluster-of-clusters analysis as the
unweighted baseline."""

__version__ = "0.1.0"

from .base_clustering import (
    Dendrogram,
    KMeansResult,
    cophenetic_distances,
    cut_dendrogram,
    hclust_average,
    kmeans,
)
from .coca import MOCMatrix, build_moc, coca, select_kbar_silhouette
from .consensus import (
    ConsensusConfig,
    ConsensusMatrix,
    InsufficientCoverageError,
    coclustering_matrix,
    consensus_matrix,
    select_k_monti,
)
from .data_model import (
    Dataset,
    KernelMatrix,
    Partition,
    WeightState,
    load_dataset,
    validate_kernel,
)
from .experiment import ExperimentConfig, run_experiment
from .metrics import ari, average_silhouette, cophenetic_correlation
from .mkkm import (
    MkkmResult,
    QPConvergenceError,
    RelaxedEmbedding,
    combine_kernels_global,
    combine_kernels_localized,
    kernel_kmeans,
    mkkm,
    update_weights_global,
    update_weights_localized,
)
from .pipeline import KlicResult, klic, klic_from_kernels
from .simgen import ScenarioSpec, generate, preset

__all__ = [
    "Dataset", "Partition", "KernelMatrix", "WeightState",
    "load_dataset", "validate_kernel",
    "Dendrogram", "KMeansResult", "kmeans", "hclust_average",
    "cut_dendrogram", "cophenetic_distances",
    "ConsensusConfig", "ConsensusMatrix", "InsufficientCoverageError",
    "coclustering_matrix", "consensus_matrix", "select_k_monti",
    "MOCMatrix", "build_moc", "coca", "select_kbar_silhouette",
    "RelaxedEmbedding", "MkkmResult", "QPConvergenceError",
    "kernel_kmeans", "combine_kernels_global", "combine_kernels_localized",
    "update_weights_global", "update_weights_localized", "mkkm",
    "KlicResult", "klic", "klic_from_kernels",
    "ari", "average_silhouette", "cophenetic_correlation",
    "ScenarioSpec", "generate", "preset",
    "ExperimentConfig", "run_experiment",
]
