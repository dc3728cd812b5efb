"""Kernel k-means via spectral relaxation, and multiple kernel k-means.

The discrete kernel k-means assignment problem is relaxed to finding the
top-k eigenvectors of the kernel matrix; cluster labels are recovered by
running Euclidean k-means on the unit-normalised eigenvector rows. Multiple
kernel k-means alternates that eigensolve with a simplex-constrained weight
update, either one weight per kernel (global) or one weight per observation
per kernel (localized).
"""

from dataclasses import dataclass, replace

import numpy as np

from ._seeds import derive_seed
from .base_clustering import kmeans
from .data_model import (
    KernelMatrix,
    Partition,
    WeightState,
    _freeze,
    require_aligned_ids,
    validate_kernel,
)

OBJECTIVE_SLACK = 1e-9


class QPConvergenceError(RuntimeError):
    """Projected-gradient weight solve did not reach the KKT tolerance."""

    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"weight QP stalled at KKT residual {residual:.3g} after {iterations} iterations")


@dataclass(frozen=True)
class RelaxedEmbedding:
    """Top-k eigenvectors of a kernel matrix, columns orthonormal."""

    H: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", _freeze(np.asarray(self.H, dtype=float)))
        object.__setattr__(self, "eigenvalues", _freeze(np.asarray(self.eigenvalues, dtype=float)))


@dataclass(frozen=True)
class MkkmResult:
    weights: WeightState
    partition: Partition
    embedding: RelaxedEmbedding
    combined: KernelMatrix
    objective_trace: tuple
    converged: bool


def _top_eigenvectors(entries, k):
    eigvals, eigvecs = np.linalg.eigh(entries)
    order = np.argsort(eigvals)[::-1][:k]
    return RelaxedEmbedding(eigvecs[:, order], eigvals[order])


def kernel_kmeans(kernel, k, seed=0, restarts=10):
    """Spectral-relaxation kernel k-means.

    Takes the top-k eigenvectors of the kernel, normalises each row to the
    unit sphere (rows that are exactly zero are left zero), and clusters the
    rows with Euclidean k-means.
    """
    n = kernel.n
    if not (2 <= k <= n):
        raise ValueError(f"k={k} out of range 2..{n}")
    embedding = _top_eigenvectors(kernel.entries, k)
    rows = np.array(embedding.H)
    norms = np.linalg.norm(rows, axis=1)
    nonzero = norms > 1e-12
    rows[nonzero] /= norms[nonzero, None]
    result = kmeans(rows, k, seed=seed, restarts=restarts)
    return result.partition, embedding


def combine_kernels_global(kernels, theta):
    """Weighted combination sum_m theta_m^2 * Delta_m."""
    ids = require_aligned_ids(kernels)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(kernels),):
        raise ValueError("one weight per kernel required")
    combined = np.zeros_like(kernels[0].entries)
    for w, kern in zip(theta, kernels):
        combined = combined + (w * w) * kern.entries
    return validate_kernel(combined, ids)


def combine_kernels_localized(kernels, theta_matrix):
    """Weighted combination sum_m (theta_m theta_m^T) o Delta_m (Hadamard)."""
    ids = require_aligned_ids(kernels)
    theta = np.asarray(theta_matrix, dtype=float)
    n = kernels[0].n
    if theta.shape != (n, len(kernels)):
        raise ValueError("weight matrix must be N x M")
    if np.abs(theta.sum(axis=1) - 1.0).max() > 1e-10:
        raise ValueError("weight matrix rows must sum to 1")
    combined = np.zeros((n, n))
    for m, kern in enumerate(kernels):
        col = theta[:, m]
        combined = combined + np.outer(col, col) * kern.entries
    return validate_kernel(combined, ids)


def update_weights_global(kernels, embedding, tol=1e-10):
    """Closed-form simplex minimiser of sum_m theta_m^2 * a_m.

    a_m = tr(Delta_m) - tr(H' Delta_m H) is the residual trace of kernel m
    not captured by the embedding; the optimum is theta_m proportional to
    1/a_m. Kernels with (numerically) zero residual share all the weight.
    """
    H = embedding.H
    a = np.empty(len(kernels))
    for m, kern in enumerate(kernels):
        a[m] = np.trace(kern.entries) - np.trace(H.T @ kern.entries @ H)
    if a.min() < -1e-8:
        raise ValueError(f"invalid embedding: negative residual trace {a.min():.3g}")
    zero = a <= tol
    theta = np.zeros(len(kernels))
    if zero.any():
        theta[zero] = 1.0 / zero.sum()
    else:
        inv = 1.0 / a
        theta = inv / inv.sum()
    return theta


def project_rows_to_simplex(matrix):
    """Euclidean projection of each row onto the probability simplex."""
    v = np.asarray(matrix, dtype=float)
    n, m = v.shape
    u = -np.sort(-v, axis=1)
    css = (np.cumsum(u, axis=1) - 1) / np.arange(1, m + 1)
    rho = (u > css).sum(axis=1) - 1
    tau = css[np.arange(n), rho]
    return np.maximum(v - tau[:, None], 0.0)


def update_weights_localized(kernels, embedding, prev, max_iter=10000, kkt_tol=1e-6):
    """Per-observation weight update for localized multiple kernel k-means.

    Minimises sum_m theta_m' (Delta_m o (I - HH')) theta_m over row-stochastic
    weight matrices, by accelerated projected gradient (FISTA with restart on
    objective increase), warm-started from the previous weights. The gradient
    step uses the exact Lipschitz constant of the block-diagonal Hessian.
    Convergence is declared when the projected-gradient (KKT) residual drops
    below ``kkt_tol``.
    """
    require_aligned_ids(kernels)
    H = embedding.H
    n, n_kernels = prev.shape
    residual_proj = np.eye(n) - H @ H.T
    quad = [0.5 * (kern.entries * residual_proj + (kern.entries * residual_proj).T)
            for kern in kernels]

    def objective(th):
        return sum(float(th[:, m] @ quad[m] @ th[:, m]) for m in range(n_kernels))

    def gradient(th):
        return np.stack([2.0 * (quad[m] @ th[:, m]) for m in range(n_kernels)], axis=1)

    def kkt_residual(th):
        return np.abs(th - project_rows_to_simplex(th - gradient(th))).max()

    theta = project_rows_to_simplex(np.asarray(prev, dtype=float))
    # the Hessian is block diagonal with blocks 2*quad[m]
    lipschitz = max(2.0 * np.linalg.eigvalsh(q)[-1] for q in quad)
    if lipschitz <= 1e-30:  # objective is flat: any feasible point is optimal
        return theta
    step = 1.0 / lipschitz
    f = objective(theta)
    point = theta  # extrapolated point
    momentum = 1.0
    for it in range(1, max_iter + 1):
        cand = project_rows_to_simplex(point - step * gradient(point))
        f_cand = objective(cand)
        if f_cand > f:  # restart the momentum from the last monotone iterate
            point, momentum = theta, 1.0
            cand = project_rows_to_simplex(point - step * gradient(point))
            f_cand = objective(cand)
        if kkt_residual(cand) <= kkt_tol:
            return cand
        next_momentum = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum ** 2))
        point = cand + ((momentum - 1.0) / next_momentum) * (cand - theta)
        theta, f, momentum = cand, f_cand, next_momentum
    residual = kkt_residual(theta)
    if residual <= kkt_tol:
        return theta
    raise QPConvergenceError(residual, max_iter)


def mkkm(kernels, k, mode="localized", seed=0, max_alternations=20, tol=1e-8, restarts=10):
    """Multiple kernel k-means by alternating eigensolve and weight update.

    Weights start uniform; each alternation recombines the kernels, takes
    the top-k eigenvectors of the combination, and re-solves for the weights.
    The trace objective tr(H' Delta H) - tr(Delta) is recorded after every
    half-step and is non-decreasing. The final partition comes from kernel
    k-means on the converged combined kernel.
    """
    if mode not in ("global", "localized"):
        raise ValueError(f"unknown mode {mode!r}")
    if not kernels:
        raise ValueError("at least one kernel required")
    ids = require_aligned_ids(kernels)
    n = kernels[0].n
    if not (2 <= k <= n):
        raise ValueError(f"k={k} out of range 2..{n}")
    n_kernels = len(kernels)

    if mode == "global":
        theta = np.full(n_kernels, 1.0 / n_kernels)
        combine = lambda th: combine_kernels_global(kernels, th)
    else:
        theta = np.full((n, n_kernels), 1.0 / n_kernels)
        combine = lambda th: combine_kernels_localized(kernels, th)

    def trace_objective(combined, H):
        return float(np.trace(H.T @ combined.entries @ H) - np.trace(combined.entries))

    trace = []
    converged = False
    combined = combine(theta)
    embedding = None
    for _ in range(max_alternations):
        embedding = _top_eigenvectors(combined.entries, k)
        trace.append(trace_objective(combined, embedding.H))
        if mode == "global":
            theta = update_weights_global(kernels, embedding)
        else:
            theta = update_weights_localized(kernels, embedding, theta)
        combined = combine(theta)
        obj = trace_objective(combined, embedding.H)
        trace.append(obj)
        if len(trace) >= 4 and abs(trace[-1] - trace[-3]) < tol:
            converged = True
            break
    partition, embedding = kernel_kmeans(combined, k, seed=seed, restarts=restarts)
    weights = WeightState(mode, theta)
    return MkkmResult(weights, partition, embedding, combined, tuple(trace), converged)
