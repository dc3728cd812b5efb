"""Core numeric containers and validity checks.

All containers are immutable after construction (the wrapped numpy arrays
are marked read-only) and can be shared freely across parallel workers.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-10
PSD_TOL = -1e-8
SIMPLEX_TOL = 1e-10


def _freeze(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An N x P matrix of feature values with per-row identifiers."""

    values: np.ndarray
    ids: tuple
    name: str = "dataset"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("dataset values must be a 2-D matrix")
        n, p = values.shape
        if n < 2:
            raise ValueError(f"need at least 2 observations, got {n}")
        if p < 1:
            raise ValueError("need at least 1 feature")
        if not np.isfinite(values).all():
            raise ValueError("dataset contains non-finite values")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != n:
            raise ValueError(f"{len(ids)} ids for {n} rows")
        if len(set(ids)) != n:
            raise ValueError("duplicate observation ids")
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "ids", ids)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]


def default_ids(n):
    return tuple(f"obs_{i + 1}" for i in range(n))


@dataclass(frozen=True)
class Partition:
    """Cluster labels in {1..k} for N items."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1:
            raise ValueError("labels must be a vector")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if labels.size and (labels.min() < 1 or labels.max() > self.k):
            raise ValueError(f"labels must lie in 1..{self.k}")
        object.__setattr__(self, "labels", _freeze(labels))

    @property
    def n(self):
        return self.labels.size

    def cluster_sizes(self):
        return np.bincount(self.labels, minlength=self.k + 1)[1:]


def relabel_first_appearance(labels):
    """Map arbitrary labels to 1..k in order of first appearance."""
    labels = np.asarray(labels)
    mapping = {}
    out = np.empty(labels.size, dtype=int)
    for i, lab in enumerate(labels):
        if lab not in mapping:
            mapping[lab] = len(mapping) + 1
        out[i] = mapping[lab]
    return out, len(mapping)


@dataclass(frozen=True)
class KernelMatrix:
    """A symmetric PSD similarity matrix with row/column identifiers.

    Construct through :func:`validate_kernel`; the constructor itself does
    not re-check symmetry or definiteness.
    """

    entries: np.ndarray
    ids: tuple

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        ids = tuple(str(i) for i in self.ids)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("kernel matrix must be square")
        if len(ids) != entries.shape[0]:
            raise ValueError("id count does not match matrix size")
        object.__setattr__(self, "entries", _freeze(entries))
        object.__setattr__(self, "ids", ids)

    @property
    def n(self):
        return self.entries.shape[0]


def validate_kernel(matrix, ids=None, consensus=False):
    """Check symmetry and positive semidefiniteness, returning a KernelMatrix.

    Symmetry is required within 1e-10 absolute; the smallest eigenvalue must
    be >= -1e-8 (slack for floating-point eigensolves). With ``consensus=True``
    additionally require entries in [0, 1] and a unit diagonal.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("kernel matrix must be square")
    if not np.isfinite(m).all():
        raise ValueError("kernel matrix contains non-finite entries")
    asym = np.abs(m - m.T).max()
    if asym > SYMMETRY_TOL:
        raise ValueError(f"asymmetric kernel matrix (max deviation {asym:.3g})")
    min_eig = np.linalg.eigvalsh(m)[0]
    if min_eig < PSD_TOL:
        raise ValueError(f"kernel matrix is not PSD (min eigenvalue {min_eig:.3g})")
    if consensus:
        if m.min() < -SYMMETRY_TOL or m.max() > 1 + SYMMETRY_TOL:
            raise ValueError("consensus kernel entries must lie in [0, 1]")
        if np.abs(np.diag(m) - 1.0).max() > SYMMETRY_TOL:
            raise ValueError("consensus kernel must have unit diagonal")
    if ids is None:
        ids = default_ids(m.shape[0])
    return KernelMatrix(m, tuple(ids))


@dataclass(frozen=True)
class WeightState:
    """Kernel weights: a length-M simplex vector (global mode) or an
    N x M row-stochastic matrix (localized mode)."""

    mode: str
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if self.mode not in ("global", "localized"):
            raise ValueError(f"unknown weight mode {self.mode!r}")
        if self.mode == "global":
            if theta.ndim != 1:
                raise ValueError("global weights must be a vector")
            rows = theta[None, :]
        else:
            if theta.ndim != 2:
                raise ValueError("localized weights must be a matrix")
            rows = theta
        if (rows < -SIMPLEX_TOL).any():
            raise ValueError("weights must be nonnegative")
        if np.abs(rows.sum(axis=1) - 1.0).max() > SIMPLEX_TOL:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "theta", _freeze(theta))

    @property
    def n_kernels(self):
        return self.theta.shape[-1]

    def mean_per_kernel(self):
        """Per-kernel weight: the column mean in localized mode."""
        if self.mode == "global":
            return np.array(self.theta)
        return self.theta.mean(axis=0)


def load_dataset(path, has_header=False, id_column=False, name=None):
    """Load a rectangular numeric CSV into a Dataset.

    The presence of a header row and of a leading id column is declared by
    the caller, never guessed from content.
    """
    rows = []
    header = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row:
                continue
            if has_header and header is None:
                header = row
                continue
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    ids = []
    values = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(f"{path}: ragged row {lineno}")
        if id_column:
            ids.append(row[0])
            cells = row[1:]
        else:
            cells = row
        try:
            values.append([float(c) for c in cells])
        except ValueError:
            raise ValueError(f"{path}: non-numeric cell in row {lineno}") from None
    n = len(values)
    if not id_column:
        ids = list(default_ids(n))
    if len(set(ids)) != n:
        raise ValueError(f"{path}: duplicate ids")
    if name is None:
        name = str(path)
    return Dataset(np.array(values, dtype=float), tuple(ids), name)


def require_aligned_ids(objects):
    """All multi-dataset operations require identical id sequences."""
    ids = objects[0].ids
    for obj in objects[1:]:
        if obj.ids != ids:
            raise ValueError("observation ids do not match across inputs")
    return ids
