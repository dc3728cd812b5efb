"""Command-line front end.

Subcommands: simgen, consensus, coca, klic, experiment, metrics. Inputs are
CSV files plus a TOML config (with a ``schema_version`` field); outputs are
CSV files written under --out.
"""

import argparse
import os
import sys

import numpy as np

try:
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from . import __version__
from ._seeds import derive_seed
from .base_clustering import kmeans
from .coca import build_moc, coca, select_kbar_silhouette
from .consensus import ConsensusConfig, consensus_matrix, kmeans_base_clusterer
from .data_model import load_dataset
from .experiment import ExperimentConfig, run_experiment
from .metrics import ari
from .pipeline import klic as run_klic
from .pipeline import klic_from_kernels
from .simgen import generate, preset

SCHEMA_VERSION = 1


def _load_config(path):
    with open(path, "rb") as fh:
        cfg = tomli.load(fh)
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SystemExit(f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    return cfg


def _write_matrix_csv(path, matrix, ids):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id," + ",".join(ids) + "\n")
        for name, row in zip(ids, np.asarray(matrix)):
            fh.write(name + "," + ",".join(f"{v:.12g}" for v in row) + "\n")


def _write_labels_csv(path, ids, labels):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,label\n")
        for name, lab in zip(ids, labels):
            fh.write(f"{name},{lab}\n")


def _write_weights_csv(path, weights, ids, kernel_names):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id," + ",".join(kernel_names) + "\n")
        theta = np.atleast_2d(np.asarray(weights.theta))
        row_ids = ids if weights.mode == "localized" else ["global"]
        for name, row in zip(row_ids, theta):
            fh.write(name + "," + ",".join(f"{v:.12g}" for v in row) + "\n")


def _read_labels_csv(path):
    import csv

    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            cell = row[-1]
            if cell == "label":  # header
                continue
            labels.append(int(cell))
    return np.array(labels)


def _load_datasets(section):
    datasets = []
    for path in section["datasets"]:
        datasets.append(load_dataset(path,
                                     has_header=section.get("has_header", False),
                                     id_column=section.get("id_column", False)))
    return datasets


def _consensus_config(section, seed):
    return ConsensusConfig(
        n_resamples=section.get("n_resamples", 1000),
        item_fraction=section.get("item_fraction", 0.8),
        feature_fraction=section.get("feature_fraction", 1.0),
        k=section.get("per_dataset_k", [3])[0] if isinstance(section.get("per_dataset_k"), list) else section.get("per_dataset_k", 3),
        base_clusterer=kmeans_base_clusterer(restarts=section.get("base_restarts", 10)),
        seed=seed,
    )


def _cmd_simgen(args):
    spec = preset(args.preset, n_obs=args.n_obs, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    truth_rows = None
    for dataset, truth in generate(spec):
        safe = dataset.name.replace("*", "star")
        path = os.path.join(args.out, f"dataset_{safe}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("id," + ",".join(f"f{j + 1}" for j in range(dataset.p)) + "\n")
            for name, row in zip(dataset.ids, dataset.values):
                fh.write(name + "," + ",".join(f"{v:.12g}" for v in row) + "\n")
        if truth_rows is None:
            truth_rows = {name: [] for name in dataset.ids}
        for name, lab in zip(dataset.ids, truth.labels):
            truth_rows[name].append(lab)
    names = [ds.name.replace("*", "star") for ds, _ in generate(spec)]
    with open(os.path.join(args.out, "truth.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write("id," + ",".join(f"label_{n}" for n in names) + "\n")
        for name, labs in truth_rows.items():
            fh.write(name + "," + ",".join(str(l) for l in labs) + "\n")
    return 0


def _cmd_consensus(args):
    dataset = load_dataset(args.data, has_header=args.has_header, id_column=args.id_column)
    config = ConsensusConfig(n_resamples=args.resamples, item_fraction=args.item_fraction,
                             k=args.k, base_clusterer=kmeans_base_clusterer(), seed=args.seed)
    cons = consensus_matrix(dataset, config)
    os.makedirs(args.out, exist_ok=True)
    _write_matrix_csv(os.path.join(args.out, "consensus.csv"), cons.entries, dataset.ids)
    _write_matrix_csv(os.path.join(args.out, "pair_counts.csv"), cons.pair_counts, dataset.ids)
    return 0


def _cmd_coca(args):
    cfg = _load_config(args.config)["coca"]
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    datasets = _load_datasets(cfg)
    per_k = cfg["per_dataset_k"]
    parts = []
    for m, (dataset, k) in enumerate(zip(datasets, per_k)):
        parts.append(kmeans(dataset.values, k, seed=derive_seed(seed, "label", m)).partition)
    moc = build_moc(parts, datasets[0].ids)
    cc = _consensus_config(cfg, derive_seed(seed, "cc"))
    if "k_bar" in cfg:
        k_bar = cfg["k_bar"]
        partition, cons = coca(moc, k_bar, cc)
    else:
        k_range = cfg.get("k_range", list(range(2, 11)))
        k_bar, partition = select_kbar_silhouette(moc, k_range, cc)
    os.makedirs(args.out, exist_ok=True)
    _write_labels_csv(os.path.join(args.out, "labels.csv"), moc.ids, partition.labels)
    print(f"k_bar={k_bar}")
    return 0


def _cmd_klic(args):
    cfg = _load_config(args.config)["klic"]
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    datasets = _load_datasets(cfg)
    per_k = cfg.get("per_dataset_k", [3] * len(datasets))
    cc = _consensus_config(cfg, seed)
    mode = cfg.get("mode", "localized")
    k_values = [cfg["k"]] if "k" in cfg else None
    result = run_klic(datasets, cfg.get("k_max", 10), cc, mode=mode,
                      seed=derive_seed(seed, "klic"), per_dataset_k=per_k) \
        if k_values is None else \
        klic_from_kernels(
            [consensus_matrix(ds, ConsensusConfig(
                n_resamples=cc.n_resamples, item_fraction=cc.item_fraction,
                feature_fraction=cc.feature_fraction, k=km,
                base_clusterer=cc.base_clusterer,
                seed=derive_seed(seed, "consensus", m))).kernel
             for m, (ds, km) in enumerate(zip(datasets, per_k))],
            cfg.get("k_max", 10), mode=mode, seed=derive_seed(seed, "klic"),
            k_values=k_values)
    os.makedirs(args.out, exist_ok=True)
    ids = datasets[0].ids
    names = [os.path.basename(p) for p in cfg["datasets"]]
    _write_labels_csv(os.path.join(args.out, "labels.csv"), ids, result.partition.labels)
    _write_weights_csv(os.path.join(args.out, "weights.csv"), result.weights, ids, names)
    with open(os.path.join(args.out, "silhouettes.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write("k,silhouette\n")
        for k in sorted(result.silhouettes):
            fh.write(f"{k},{result.silhouettes[k]:.12g}\n")
    print(f"best_k={result.best_k}")
    return 0


def _cmd_experiment(args):
    cfg = _load_config(args.config)["experiment"]
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    kwargs = dict(
        scenario=cfg["scenario"],
        methods=tuple(cfg.get("methods", ["klic_localized"])),
        subsets=cfg.get("subsets"),
        k=cfg.get("k"),
        k_max=cfg.get("k_max", 10),
        seed=seed,
        separations=tuple(cfg["separations"]) if "separations" in cfg else None,
        jobs=args.jobs,
    )
    if args.paper_scale:
        config = ExperimentConfig.paper_scale(**kwargs)
    else:
        kwargs.update(
            replicates=cfg.get("replicates", 10),
            n_obs=cfg.get("n_obs", 150),
            n_resamples=cfg.get("n_resamples", 100),
            item_fraction=cfg.get("item_fraction", 0.8),
            base_restarts=cfg.get("base_restarts", 5),
        )
        config = ExperimentConfig(**kwargs)
    return run_experiment(config, args.out, plot_data=args.plot_data)


def _cmd_metrics(args):
    if args.metric == "ari":
        a = _read_labels_csv(args.file_a)
        b = _read_labels_csv(args.file_b)
        print(f"{ari(a, b):.12g}")
        return 0
    raise SystemExit(f"unknown metric {args.metric!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="klic", description="Integrative consensus clustering toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simgen", help="generate synthetic scenario datasets")
    p.add_argument("--preset", required=True, choices=["similar", "noise", "nested"])
    p.add_argument("--n-obs", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simgen)

    p = sub.add_parser("consensus", help="consensus-cluster one dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--id-column", action="store_true")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--item-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_consensus)

    p = sub.add_parser("coca", help="cluster-of-clusters analysis")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_coca)

    p = sub.add_parser("klic", help="kernel learning integrative clustering")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_klic)

    p = sub.add_parser("experiment", help="run a replicated benchmark experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--paper-scale", action="store_true",
                   help="use full-size settings (300 obs, 1000 resamples, 100 replicates)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--plot-data", action="store_true",
                   help="also write plot_data.csv in tidy long format")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("metrics", help="compute evaluation metrics from label files")
    p.add_argument("metric", choices=["ari"])
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(func=_cmd_metrics)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        # single-threaded BLAS: multi-threaded reductions are not bitwise
        # reproducible, and identical (config, seed) must give identical files
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1):
            return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
