"""Batch experiment runner.

Runs replicated synthetic-scenario benchmarks of the integrative clustering
methods and writes machine-readable CSV results: one row per replicate,
method and dataset subset, plus per-kernel weights and a quartile summary.
All randomness is derived from a single master seed, so reruns with the same
config reproduce the same rows (wall-clock timings excepted).
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from ._seeds import derive_seed
from .base_clustering import kmeans
from .coca import build_moc, coca
from .consensus import ConsensusConfig, consensus_matrix, kmeans_base_clusterer
from .metrics import ari
from .pipeline import klic_from_kernels
from .simgen import generate, preset

METHODS = ("klic_global", "klic_localized", "coca", "kernel_kmeans_single")

DEFAULT_SUBSETS = {
    "similar": [["A"], ["B"], ["C"], ["D"], ["A", "B", "C", "D"]],
    "noise": [["0"], ["1"], ["2"], ["3"],
              ["0", "1", "2"], ["0", "1", "3"], ["0", "2", "3"], ["1", "2", "3"]],
    "nested": [["6"], ["3"], ["6*"], ["3", "6"], ["3", "6*"]],
}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    replicates: int = 10
    n_obs: int = 150
    n_resamples: int = 100
    item_fraction: float = 0.8
    methods: tuple = ("klic_localized",)
    subsets: tuple = None
    k: int = None          # fixed cluster count; if None, select 2..k_max
    k_max: int = 10
    seed: int = 0
    separations: tuple = None
    base_restarts: int = 5
    final_restarts: int = 10
    max_alternations: int = 20
    jobs: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        subsets = self.subsets
        if subsets is None:
            if self.scenario not in DEFAULT_SUBSETS:
                raise ValueError(f"unknown scenario {self.scenario!r} and no subsets given")
            subsets = DEFAULT_SUBSETS[self.scenario]
        object.__setattr__(self, "subsets", tuple(tuple(s) for s in subsets))
        object.__setattr__(self, "methods", tuple(self.methods))

    @classmethod
    def paper_scale(cls, scenario, **overrides):
        """Paper-scale settings: 300 observations, 1000 resamples, 100 replicates."""
        defaults = dict(replicates=100, n_obs=300, n_resamples=1000, base_restarts=10)
        defaults.update(overrides)
        return cls(scenario, **defaults)


def _subset_label(names):
    return "+".join(names)


def _pick_truth(truths, run_k):
    """Truth partition to score against: the one whose cluster count matches
    the run's k when the subset mixes cluster counts, else the first."""
    for t in truths:
        if t.k == run_k:
            return t
    return truths[0]


def _run_one(config, method, names, kernels_by_name, data_by_name, run_seed):
    kernels = [kernels_by_name[n] for n in names]
    datasets = [data_by_name[n][0] for n in names]
    truths = [data_by_name[n][1] for n in names]
    weights = None

    if method in ("klic_global", "klic_localized", "kernel_kmeans_single"):
        if method == "kernel_kmeans_single" and len(names) != 1:
            return None
        mode = "global" if method == "klic_global" else "localized"
        k_values = [config.k] if config.k is not None else None
        result = klic_from_kernels(kernels, config.k_max, mode=mode, seed=run_seed,
                                   k_values=k_values,
                                   max_alternations=config.max_alternations,
                                   restarts=config.final_restarts)
        selected_k = result.best_k
        partition = result.partition
        if method != "kernel_kmeans_single":
            weights = result.weights.mean_per_kernel()
    elif method == "coca":
        parts = []
        for name, dataset, truth in zip(names, datasets, truths):
            res = kmeans(dataset.values, truth.k,
                         seed=derive_seed(run_seed, "coca-label", name),
                         restarts=config.base_restarts)
            parts.append(res.partition)
        moc = build_moc(parts, datasets[0].ids)
        cc = ConsensusConfig(n_resamples=config.n_resamples,
                             item_fraction=config.item_fraction,
                             k=2,  # replaced inside coca by k_bar
                             base_clusterer=kmeans_base_clusterer(restarts=config.base_restarts),
                             seed=derive_seed(run_seed, "coca-cc"))
        selected_k = config.k if config.k is not None else truths[0].k
        partition, _cons = coca(moc, selected_k, cc)
    else:
        raise ValueError(f"unknown method {method!r}")

    truth = _pick_truth(truths, selected_k)
    score = ari(partition, truth)
    return selected_k, score, weights


def run_replicate(config, r):
    """All method x subset runs for one replicate. Returns result and weight rows.

    BLAS threading is pinned to one thread for the duration: multi-threaded
    BLAS reductions are not bitwise reproducible run-to-run, and reproducible
    outputs are part of the contract.
    """
    with threadpool_limits(limits=1):
        return _run_replicate(config, r)


def _run_replicate(config, r):
    spec = preset(config.scenario, n_obs=config.n_obs,
                  seed=derive_seed(config.seed, "data", r),
                  separations=config.separations)
    data_by_name = {ds.name: (ds, truth) for ds, truth in generate(spec)}

    kernels_by_name = {}
    for name, (dataset, truth) in data_by_name.items():
        cc = ConsensusConfig(n_resamples=config.n_resamples,
                             item_fraction=config.item_fraction,
                             k=truth.k,
                             base_clusterer=kmeans_base_clusterer(restarts=config.base_restarts),
                             seed=derive_seed(config.seed, "cc", r, name))
        kernels_by_name[name] = consensus_matrix(dataset, cc).kernel

    results = []
    weight_rows = []
    failed = False
    for method in config.methods:
        for names in config.subsets:
            label = _subset_label(names)
            run_seed = derive_seed(config.seed, "run", r, method, label)
            start = time.perf_counter()
            try:
                out = _run_one(config, method, names, kernels_by_name, data_by_name, run_seed)
            except Exception as exc:  # noqa: BLE001 - partial-failure policy
                failed = True
                seconds = time.perf_counter() - start
                results.append((r, method, label, "", f"error:{type(exc).__name__}", seconds))
                continue
            seconds = time.perf_counter() - start
            if out is None:  # method not applicable to this subset; keep the row
                results.append((r, method, label, "", "not_applicable", seconds))
                continue
            selected_k, score, weights = out
            results.append((r, method, label, selected_k, score, seconds))
            if weights is not None:
                for name, w in zip(names, weights):
                    weight_rows.append((r, method, label, name, float(w)))
    return results, weight_rows, failed


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(c) for c in row) + "\n")


def summarize(results):
    """Median and quartiles of the ARI per (method, subset)."""
    groups = {}
    for r, method, subset, selected_k, score, seconds in results:
        if isinstance(score, str):
            continue
        groups.setdefault((method, subset), []).append(score)
    rows = []
    for (method, subset), scores in sorted(groups.items()):
        a = np.array(scores)
        rows.append((method, subset, float(np.median(a)),
                     float(np.percentile(a, 25)), float(np.percentile(a, 75))))
    return rows


def run_experiment(config, out_dir, plot_data=False):
    """Run every replicate and write results.csv, weights.csv and summary.csv.

    A failed run is recorded with an error code in its ari field and the
    experiment continues; the return code is nonzero if anything failed.
    With ``plot_data=True`` an additional plot_data.csv is written in tidy
    long format (one measurement per row) for direct use by plotting tools.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    all_results = []
    all_weights = []
    any_failed = False
    replicate_ids = range(1, config.replicates + 1)
    if config.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outputs = list(pool.map(run_replicate, [config] * config.replicates,
                                    replicate_ids))
    else:
        outputs = [run_replicate(config, r) for r in replicate_ids]
    for results, weight_rows, failed in outputs:
        all_results.extend(results)
        all_weights.extend(weight_rows)
        any_failed = any_failed or failed

    all_results.sort(key=lambda row: (row[0], row[1], row[2]))
    all_weights.sort(key=lambda row: (row[0], row[1], row[2], row[3]))
    summary = summarize(all_results)

    _write_csv(os.path.join(out_dir, "results.csv"),
               ("replicate", "method", "subset", "selected_k", "ari", "seconds"),
               all_results)
    _write_csv(os.path.join(out_dir, "weights.csv"),
               ("replicate", "method", "subset", "kernel", "mean_weight"),
               all_weights)
    _write_csv(os.path.join(out_dir, "summary.csv"),
               ("method", "subset", "median_ari", "q1", "q3"),
               summary)

    if plot_data:
        long_rows = []
        for r, method, subset, selected_k, score, _seconds in all_results:
            if not isinstance(score, str):
                long_rows.append((config.scenario, method, subset, r, "ari", score))
            if selected_k != "":
                long_rows.append((config.scenario, method, subset, r,
                                  "selected_k", float(selected_k)))
        _write_csv(os.path.join(out_dir, "plot_data.csv"),
                   ("scenario", "method", "subset", "replicate", "metric", "value"),
                   long_rows)

    # internal consistency: the written summary must match a recomputation
    # from the written results
    recheck = summarize(all_results)
    assert recheck == summary
    return 1 if any_failed else 0
