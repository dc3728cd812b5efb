import numpy as np
import pytest

from klic.consensus import ConsensusConfig, consensus_matrix
from klic.data_model import validate_kernel
from klic.metrics import ari
from klic.mkkm import (
    RelaxedEmbedding,
    combine_kernels_global,
    combine_kernels_localized,
    kernel_kmeans,
    mkkm,
    project_rows_to_simplex,
    update_weights_global,
    update_weights_localized,
)
from klic.simgen import ScenarioSpec, generate


def block_kernel(sizes):
    n = sum(sizes)
    k = np.zeros((n, n))
    start = 0
    for s in sizes:
        k[start:start + s, start:start + s] = 1.0
        start += s
    return validate_kernel(k)


def random_psd_kernel(n, seed, rank=None):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, rank or n))
    m = a @ a.T
    m /= np.abs(m).max()
    return validate_kernel(0.5 * (m + m.T))


def embedding_from_columns(n, cols):
    h = np.eye(n)[:, cols]
    return RelaxedEmbedding(h, np.ones(len(cols)))


def random_embedding(n, k, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, k)))
    return RelaxedEmbedding(q, np.zeros(k))


class TestKernelKMeans:
    def test_ideal_two_block_kernel(self):
        kern = block_kernel([3, 3])
        part, _emb = kernel_kmeans(kern, 2, seed=0)
        assert ari(part, np.array([1, 1, 1, 2, 2, 2])) == 1.0

    def test_identity_kernel_degenerate_but_ok(self):
        part, _emb = kernel_kmeans(validate_kernel(np.eye(4)), 2, seed=0)
        assert part.k == 2

    def test_recovers_clusters_from_consensus_matrix(self):
        # at separation 3 the clusters overlap slightly, capping the
        # achievable median ARI near 0.94 (measured over 20 seeds)
        scores = []
        for seed in range(8):
            spec = ScenarioSpec("similar", ("A",), (3,), (3.0,), n_obs=150, seed=seed)
            (ds, truth), = generate(spec)
            cons = consensus_matrix(ds, ConsensusConfig(n_resamples=50, item_fraction=0.8,
                                                        k=3, seed=seed))
            part, _emb = kernel_kmeans(cons.kernel, 3, seed=seed)
            scores.append(ari(part, truth))
        assert np.median(scores) >= 0.9

    def test_scale_invariance(self):
        kern = random_psd_kernel(20, 3)
        scaled = validate_kernel(3.7 * kern.entries)
        p1, _ = kernel_kmeans(kern, 3, seed=1)
        p2, _ = kernel_kmeans(scaled, 3, seed=1)
        assert ari(p1, p2) == 1.0

    def test_trace_identity(self):
        for seed in range(8):
            n = 10 + 5 * seed
            kern = random_psd_kernel(n, seed)
            k = 3
            _part, emb = kernel_kmeans(kern, k, seed=seed)
            trace = np.trace(emb.H.T @ kern.entries @ emb.H)
            assert trace == pytest.approx(emb.eigenvalues.sum(), rel=1e-8)
            assert np.allclose(emb.H.T @ emb.H, np.eye(k), atol=1e-8)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            kernel_kmeans(validate_kernel(np.eye(3)), 4, seed=0)


class TestCombineKernels:
    def test_global_single_kernel_identity(self):
        kern = random_psd_kernel(8, 0)
        out = combine_kernels_global([kern], np.array([1.0]))
        assert np.array_equal(out.entries, kern.entries)

    def test_global_two_equal_kernels(self):
        kern = random_psd_kernel(8, 1)
        out = combine_kernels_global([kern, kern], np.array([0.5, 0.5]))
        assert np.allclose(out.entries, 0.5 * kern.entries)

    def test_global_degenerate_weight(self):
        k1, k2 = random_psd_kernel(8, 2), random_psd_kernel(8, 3)
        out = combine_kernels_global([k1, k2], np.array([1.0, 0.0]))
        assert np.array_equal(out.entries, k1.entries)

    def test_localized_column_selector(self):
        k1, k2 = random_psd_kernel(6, 4), random_psd_kernel(6, 5)
        theta = np.zeros((6, 2))
        theta[:, 1] = 1.0
        out = combine_kernels_localized([k1, k2], theta)
        assert np.allclose(out.entries, k2.entries)

    def test_localized_uniform_halves(self):
        kern = random_psd_kernel(6, 6)
        out = combine_kernels_localized([kern, kern], np.full((6, 2), 0.5))
        assert np.allclose(out.entries, 0.5 * kern.entries)

    def test_localized_disjoint_support_zeroes_cross_terms(self):
        k1, k2 = random_psd_kernel(4, 7), random_psd_kernel(4, 8)
        theta = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        out = combine_kernels_localized([k1, k2], theta)
        assert out.entries[0, 1] == 0.0
        assert out.entries[2, 3] == 0.0

    def test_id_mismatch(self):
        k1 = random_psd_kernel(5, 9)
        k2 = validate_kernel(np.eye(5), ids=tuple("abcde"))
        with pytest.raises(ValueError, match="ids"):
            combine_kernels_global([k1, k2], np.array([0.5, 0.5]))


def simplex_grid_oracle(a, step=1e-3):
    """Oracle: minimise sum(theta^2 * a) on the simplex by grid search."""
    m = len(a)
    best = (np.inf, None)
    if m == 2:
        for t in np.arange(0, 1 + step, step):
            theta = np.array([t, 1 - t])
            val = (theta ** 2 * a).sum()
            if val < best[0]:
                best = (val, theta)
    elif m == 3:
        for t1 in np.arange(0, 1 + step, 5 * step):
            for t2 in np.arange(0, 1 - t1 + step, 5 * step):
                theta = np.array([t1, t2, 1 - t1 - t2])
                val = (theta ** 2 * a).sum()
                if val < best[0]:
                    best = (val, theta)
    else:
        raise NotImplementedError
    return best


class TestUpdateWeightsGlobal:
    def _kernels_with_residuals(self, residuals, k=1):
        # diagonal kernels against the first-k-columns embedding: the
        # residual trace of diag(d) is the sum of d beyond the first k entries
        n = len(residuals) and 3
        kernels = [validate_kernel(np.diag([1.0, float(r), 0.0])) for r in residuals]
        emb = embedding_from_columns(3, [0])
        return kernels, emb

    def test_symmetric_residuals(self):
        kernels, emb = self._kernels_with_residuals([1.0, 1.0])
        assert np.allclose(update_weights_global(kernels, emb), [0.5, 0.5])

    def test_one_three_residuals(self):
        kernels, emb = self._kernels_with_residuals([1.0, 3.0])
        theta = update_weights_global(kernels, emb)
        assert np.allclose(theta, [0.75, 0.25])
        _val, oracle = simplex_grid_oracle(np.array([1.0, 3.0]))
        assert np.abs(theta - oracle).max() < 2e-3

    def test_zero_residual_takes_all_weight(self):
        kernels, emb = self._kernels_with_residuals([0.0, 5.0])
        assert np.allclose(update_weights_global(kernels, emb), [1.0, 0.0])

    def test_matches_grid_oracle_objective(self):
        rng = np.random.default_rng(10)
        for m in (2, 3):
            for trial in range(5):
                n = 8
                kernels = [random_psd_kernel(n, 100 + 10 * m + trial * m + i) for i in range(m)]
                emb = random_embedding(n, 3, trial)
                theta = update_weights_global(kernels, emb)
                a = np.array([np.trace(k.entries) - np.trace(emb.H.T @ k.entries @ emb.H)
                              for k in kernels])
                val = (theta ** 2 * a).sum()
                oracle_val, _ = simplex_grid_oracle(a)
                assert val <= oracle_val + 1e-3


class TestProjectRowsToSimplex:
    def test_known_values(self):
        out = project_rows_to_simplex(np.array([[0.5, 0.5], [2.0, 0.0], [-1.0, -3.0]]))
        assert np.allclose(out, [[0.5, 0.5], [1.0, 0.0], [1.0, 0.0]])

    def test_projection_properties(self):
        rng = np.random.default_rng(11)
        v = rng.normal(size=(30, 5)) * 3
        out = project_rows_to_simplex(v)
        assert (out >= 0).all()
        assert np.allclose(out.sum(axis=1), 1.0)
        # projection is the identity on feasible points
        feasible = rng.dirichlet(np.ones(5), size=10)
        assert np.allclose(project_rows_to_simplex(feasible), feasible, atol=1e-12)


class TestUpdateWeightsLocalized:
    def test_identical_kernels_give_uniform_weights(self):
        kern = random_psd_kernel(8, 20)
        emb = random_embedding(8, 2, 0)
        prev = np.full((8, 3), 1.0 / 3)
        theta = update_weights_localized([kern, kern, kern], emb, prev)
        assert np.abs(theta - 1.0 / 3).max() < 1e-6

    def test_zero_kernel_releases_weight(self):
        n = 8
        rng = np.random.default_rng(21)
        a = rng.normal(size=(n, n))
        k1 = validate_kernel(a @ a.T + n * np.eye(n))
        k2 = validate_kernel(np.zeros((n, n)))
        emb = random_embedding(n, 2, 1)
        prev = np.full((n, 2), 0.5)
        theta = update_weights_localized([k1, k2], emb, prev)
        assert np.abs(theta[:, 0]).max() < 1e-5
        assert np.abs(theta[:, 1] - 1.0).max() < 1e-5

    def test_matches_lbfgs_oracle(self):
        from scipy.optimize import minimize

        for trial in range(5):
            n = int(np.random.default_rng(trial).integers(2, 11))
            k1 = random_psd_kernel(n, 30 + trial)
            k2 = random_psd_kernel(n, 40 + trial)
            emb = random_embedding(n, 2, trial)
            p = np.eye(n) - emb.H @ emb.H.T
            q1, q2 = k1.entries * p, k2.entries * p
            prev = np.full((n, 2), 0.5)
            theta = update_weights_localized([k1, k2], emb, prev)

            def objective(x):
                return x @ q1 @ x + (1 - x) @ q2 @ (1 - x)

            def grad(x):
                return 2 * (q1 @ x) - 2 * (q2 @ (1 - x))

            res = minimize(objective, np.full(n, 0.5), jac=grad, method="L-BFGS-B",
                           bounds=[(0.0, 1.0)] * n, options={"ftol": 1e-14, "gtol": 1e-10})
            assert objective(theta[:, 0]) <= res.fun + 1e-3

    def test_two_point_grid_oracle(self):
        k1 = random_psd_kernel(2, 50)
        k2 = random_psd_kernel(2, 51)
        emb = random_embedding(2, 1, 2)
        p = np.eye(2) - emb.H @ emb.H.T
        q1, q2 = k1.entries * p, k2.entries * p
        theta = update_weights_localized([k1, k2], emb, np.full((2, 2), 0.5))

        best = np.inf
        for t1 in np.arange(0, 1.0005, 1e-3):
            for t2 in np.arange(0, 1.0005, 1e-3):
                x = np.array([t1, t2])
                val = x @ q1 @ x + (1 - x) @ q2 @ (1 - x)
                best = min(best, val)
        ours = theta[:, 0] @ q1 @ theta[:, 0] + theta[:, 1] @ q2 @ theta[:, 1]
        assert ours <= best + 1e-3


class TestMkkm:
    def test_single_kernel_reduces_to_kernel_kmeans(self):
        kern = random_psd_kernel(15, 60)
        for mode in ("global", "localized"):
            res = mkkm([kern], 3, mode=mode, seed=7)
            part, _emb = kernel_kmeans(kern, 3, seed=7)
            assert res.partition.labels.tolist() == part.labels.tolist()
            assert np.allclose(res.weights.theta, 1.0)

    def test_objective_trace_monotone(self):
        for mode in ("global", "localized"):
            for trial in range(4):
                kernels = [random_psd_kernel(12, 70 + trial * 3 + i) for i in range(3)]
                res = mkkm(kernels, 3, mode=mode, seed=trial)
                trace = np.array(res.objective_trace)
                assert (np.diff(trace) >= -1e-9).all()

    def test_equal_information_gets_equal_weights_on_average(self):
        # within one replicate the weights can favour whichever kernel came
        # out crisper; averaged over replicates they split evenly
        totals = np.zeros(4)
        reps = 6
        for rep in range(reps):
            kernels = []
            for m in range(4):
                spec = ScenarioSpec("similar", ("A",), (3,), (2.0,),
                                    n_obs=60, seed=1000 + 10 * rep + m)
                (ds, truth), = generate(spec)
                cons = consensus_matrix(ds, ConsensusConfig(n_resamples=50, item_fraction=0.8,
                                                            k=3, seed=10 * rep + m))
                kernels.append(cons.kernel)
            res = mkkm(kernels, 3, mode="localized", seed=rep)
            totals += res.weights.mean_per_kernel()
        assert np.all(np.abs(totals / reps - 0.25) <= 0.1)

    def test_noisier_dataset_gets_lower_weight(self):
        kernels = []
        for i, s in enumerate((0.0, 2.0, 3.0)):
            spec = ScenarioSpec("similar", ("A",), (6,), (s,), n_obs=60, seed=200 + i)
            (ds, truth), = generate(spec)
            cons = consensus_matrix(ds, ConsensusConfig(n_resamples=50, item_fraction=0.8,
                                                        k=6, seed=i))
            kernels.append(cons.kernel)
        res = mkkm(kernels, 6, mode="localized", seed=0)
        means = res.weights.mean_per_kernel()
        assert means[2] > means[0]

    def test_combined_kernel_is_valid(self):
        kernels = [random_psd_kernel(10, 80 + i) for i in range(2)]
        res = mkkm(kernels, 2, mode="localized", seed=0)
        validate_kernel(res.combined.entries)

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            mkkm([random_psd_kernel(5, 0)], 2, mode="other", seed=0)
