import numpy as np
import pytest

from clusterdesign.errors import KTooLarge, NonSymmetric
from clusterdesign.graph import generate_erdos_renyi, load_edge_list
from clusterdesign.metrics import Heterogeneity, objective_abs, surrogate_hetero
from clusterdesign.optimizer import (
    SolverConfig,
    build_trace_matrix,
    causal_cluster,
    constrained_kmeans,
    integral_trace_value,
    kmeans,
    round_to_clusters,
    solve_sdp,
    spectral_equal_size,
    symmetric_eigen,
)
from clusterdesign.partition import make_clustering, trivial_partitions

from conftest import all_partitions, brute_force_trace_max, path_graph, two_triangles

TIGHT = SolverConfig(tol_primal=1e-9, tol_dual=1e-9, max_iter=100_000)


def single_edge():
    return load_edge_list("0\t1\n")


class TestTraceMatrix:
    def test_path4_symmetrized_entry(self, path4):
        tm = build_trace_matrix(path4, 1.0)
        assert tm.c[0, 1] == 2.0
        assert np.array_equal(tm.c, tm.c.T)

    def test_xi_zero(self, path4):
        tm = build_trace_matrix(path4, 0.0)
        a = path4.adjacency_matrix()
        l = a / np.maximum(path4.degrees[:, None], 1)
        assert np.allclose(tm.c, 4 * (l + l.T) / 2)

    def test_hetero_identity_weights_match_homogeneous(self, path4):
        het = Heterogeneity(alpha=np.ones(4), psi=np.ones(4), psi_bar=1.0)
        hom = build_trace_matrix(path4, 2.0)
        mix = build_trace_matrix(path4, 2.0, het)
        assert np.array_equal(hom.c, mix.c)

    def test_isolated_rows_zero(self):
        g = load_edge_list("0\t1\nnode\t2\n")
        tm = build_trace_matrix(g, 0.0)
        assert np.all(tm.c[2] == 0)

    def test_rejects_weighted(self):
        g = load_edge_list("0\t1\t0.4\n")
        from clusterdesign.errors import NotBinary

        with pytest.raises(NotBinary):
            build_trace_matrix(g, 1.0)

    def test_dense_guard(self, path4):
        with pytest.raises(ValueError):
            build_trace_matrix(path4, 1.0, dense_limit=3)


class TestIntegralTraceValue:
    def test_hand_values(self, path4):
        tm = build_trace_matrix(path4, 1.0)
        assert integral_trace_value(tm, make_clustering([0, 0, 1, 1], 4)) == 4.0
        assert integral_trace_value(tm, trivial_partitions(4)[1]) == 0.0

    def test_ranking_matches_objective_on_all_p4_partitions(self, path4):
        labs = all_partitions(4)
        assert len(labs) == 15
        for xi in (0.5, 1.0, 2.0):
            tm = build_trace_matrix(path4, xi)
            traces, objs = [], []
            for row in labs:
                c = make_clustering(row.tolist(), 4)
                traces.append(integral_trace_value(tm, c))
                objs.append(objective_abs(path4, c, xi))
            traces, objs = np.array(traces), np.array(objs)
            # affine relation: obj = (const - trace)/n^2, so orderings reverse
            for i in range(15):
                for j in range(15):
                    if traces[i] > traces[j] + 1e-9:
                        assert objs[i] < objs[j] + 1e-12
            const = traces + 16 * objs
            assert np.allclose(const, const[0], atol=1e-9)

    def test_weighted_ranking_matches_surrogate(self, path4):
        rng = np.random.default_rng(5)
        alpha = rng.uniform(0.3, 1.0, size=4)
        alpha /= alpha.max()
        psi = rng.uniform(0.2, 1.5, size=4)
        het = Heterogeneity(alpha=alpha, psi=psi, psi_bar=4.0, phi_bar=0.5)
        xi = 1.7
        tm = build_trace_matrix(path4, xi, het)
        rows = []
        for row in all_partitions(4):
            c = make_clustering(row.tolist(), 4)
            rows.append((integral_trace_value(tm, c), surrogate_hetero(path4, c, xi, het)))
        for t_i, o_i in rows:
            for t_j, o_j in rows:
                if t_i > t_j + 1e-9:
                    assert o_i < o_j + 1e-12


class TestSolveSdp:
    def test_two_node_closed_forms(self):
        g = single_edge()
        res1 = solve_sdp(build_trace_matrix(g, 1.0), TIGHT)
        assert res1.converged
        assert res1.x[0, 1] == pytest.approx(1.0, abs=1e-6)
        assert res1.objective == pytest.approx(0.0, abs=1e-6)
        res3 = solve_sdp(build_trace_matrix(g, 3.0), TIGHT)
        assert res3.x[0, 1] == pytest.approx(-1.0, abs=1e-6)
        assert res3.objective == pytest.approx(-4.0, abs=1e-6)

    def test_feasibility_postconditions(self):
        rng = np.random.default_rng(0)
        for n in (3, 6, 9):
            m = rng.standard_normal((n, n)) * 3
            tm = build_trace_matrix(generate_erdos_renyi(n, 0.5, seed=n), xi=1.7)
            for c in (tm.c, (m + m.T) / 2):
                from clusterdesign.optimizer import TraceMatrix

                res = solve_sdp(TraceMatrix(c=c, xi=0.0), SolverConfig())
                assert np.allclose(np.diag(res.x), 1.0, atol=1e-12)
                assert np.linalg.eigvalsh(res.x).min() >= -1e-6

    def test_nonsymmetric_rejected(self):
        from clusterdesign.optimizer import TraceMatrix

        with pytest.raises(NonSymmetric):
            solve_sdp(TraceMatrix(c=np.array([[0.0, 1.0], [0.5, 0.0]]), xi=0.0))

    def test_max_iter_flag(self):
        g = generate_erdos_renyi(8, 0.4, seed=1)
        cfg = SolverConfig(max_iter=3)
        res = solve_sdp(build_trace_matrix(g, 1.0), cfg)
        assert res.max_iter_exceeded and not res.converged
        assert np.allclose(np.diag(res.x), 1.0)

    def test_trace_log(self):
        g = single_edge()
        res = solve_sdp(build_trace_matrix(g, 1.0), SolverConfig(), keep_log=True)
        assert res.trace_log and res.trace_log[0][0] == 1
        assert len(res.trace_log) == res.iterations

    def test_sandwich_on_small_instances(self):
        for name, g, xi in [("path4", path_graph(4), 1.0), ("tri", two_triangles(), 2.0)]:
            tm = build_trace_matrix(g, xi)
            res = solve_sdp(tm, TIGHT)
            assert res.objective >= brute_force_trace_max(g, xi) - 1e-6, name


class TestSymmetricEigen:
    def test_diagonal(self):
        vals, vecs = symmetric_eigen(np.diag([3.0, 1.0]), 2)
        assert vals.tolist() == [3.0, 1.0]
        assert np.allclose(np.abs(vecs), np.eye(2))

    def test_swap_matrix(self):
        vals, _ = symmetric_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]), 2)
        assert np.allclose(vals, [1.0, -1.0])

    def test_residuals_random_50(self):
        rng = np.random.default_rng(7)
        m = rng.standard_normal((50, 50))
        m = (m + m.T) / 2
        vals, vecs = symmetric_eigen(m, 50)
        scale = np.linalg.norm(m)
        for i in range(50):
            assert np.linalg.norm(m @ vecs[:, i] - vals[i] * vecs[:, i]) <= 1e-8 * scale
        assert np.all(np.diff(vals) <= 1e-12)

    def test_sign_convention(self):
        m = np.array([[2.0, -1.0], [-1.0, 2.0]])
        _, vecs = symmetric_eigen(m, 2)
        for j in range(2):
            col = vecs[:, j]
            nz = np.nonzero(np.abs(col) > 1e-12)[0]
            assert col[nz[0]] > 0

    def test_nonsymmetric_error(self):
        with pytest.raises(NonSymmetric):
            symmetric_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)


class TestKmeans:
    def test_separated_1d(self):
        labels = kmeans(np.array([0.0, 0.1, 10.0, 10.1]), 2, SolverConfig(seed=1))
        assert labels[0] == labels[1] != labels[2] == labels[3]

    def test_k_one_and_k_n(self):
        pts = np.arange(5.0)
        assert len(set(kmeans(pts, 1, SolverConfig()).tolist())) == 1
        assert len(set(kmeans(pts, 5, SolverConfig()).tolist())) == 5

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            kmeans(np.arange(3.0), 4, SolverConfig())

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((40, 3))
        a = kmeans(pts, 4, SolverConfig(seed=9))
        b = kmeans(pts, 4, SolverConfig(seed=9))
        assert np.array_equal(a, b)

    def test_duplicate_points_still_fill_k(self):
        pts = np.zeros((6, 2))
        labels = kmeans(pts, 3, SolverConfig(seed=0))
        assert len(set(labels.tolist())) == 3


class TestRounding:
    def test_exact_block_matrix(self):
        x = np.zeros((4, 4))
        x[:2, :2] = 1.0
        x[2:, 2:] = 1.0
        c = round_to_clusters(x, 2, SolverConfig(seed=0))
        assert c.assignment[0] == c.assignment[1] != c.assignment[2] == c.assignment[3]

    def test_identity_gives_singletons(self):
        c = round_to_clusters(np.eye(5), 5, SolverConfig(seed=0))
        assert c.k == 5

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            round_to_clusters(np.eye(3), 4, SolverConfig())


class TestCausalCluster:
    def test_two_node_xi1_single_cluster(self):
        g = single_edge()
        c, rep = causal_cluster(g, 1.0, 1, 2)
        assert c.k == 1
        assert rep.objective_abs == 1.0

    def test_two_node_xi3_singletons(self):
        g = single_edge()
        c, rep = causal_cluster(g, 3.0, 1, 2)
        assert c.k == 2
        assert rep.objective_abs == 2.5

    def test_triangles_recover_components(self, triangles):
        c, rep = causal_cluster(triangles, 1.0, 1, 6)
        assert c.k == 2
        assert rep.objective_abs == 0.5
        assert c.assignment[0] == c.assignment[1] == c.assignment[2]

    def test_never_worse_than_trivials(self):
        for seed in range(5):
            g = generate_erdos_renyi(9, 0.35, seed=seed)
            for xi in (0.5, 2.0, 10.0):
                _, rep = causal_cluster(g, xi, 1, 9, cfg=SolverConfig(seed=seed))
                singleton, single = trivial_partitions(9)
                bound = min(objective_abs(g, singleton, xi), objective_abs(g, single, xi))
                assert rep.objective_abs <= bound + 1e-12

    def test_deterministic_and_jobs_invariant(self):
        g = generate_erdos_renyi(12, 0.3, seed=4)
        a, _ = causal_cluster(g, 2.0, 1, 8, cfg=SolverConfig(seed=5))
        b, _ = causal_cluster(g, 2.0, 1, 8, cfg=SolverConfig(seed=5))
        c, _ = causal_cluster(g, 2.0, 1, 8, cfg=SolverConfig(seed=5), jobs=3)
        assert a == b == c

    def test_resolve_per_k_matches_shared(self, triangles):
        a, _ = causal_cluster(triangles, 1.0, 1, 4, cfg=SolverConfig(seed=1))
        b, _ = causal_cluster(triangles, 1.0, 1, 4, cfg=SolverConfig(seed=1), resolve_per_k=True)
        assert a == b

    def test_bad_k_range(self, path4):
        with pytest.raises(KTooLarge):
            causal_cluster(path4, 1.0, 2, 9)

    def test_hetero_default_xi(self, path4):
        het = Heterogeneity(psi=np.full(4, 0.5), psi_bar=1.0, phi_bar=0.5)
        _, rep = causal_cluster(path4, None, 1, 4, het=het)
        assert rep.xi == pytest.approx(4.0)  # 1/phi^2


class TestSpectralEqualSize:
    def test_triangles(self, triangles):
        c = spectral_equal_size(triangles, 1.0, 2)
        assert c.sizes.tolist() == [3, 3]
        assert c.assignment[0] == c.assignment[1] == c.assignment[2]

    def test_path4_even_split(self, path4):
        c = spectral_equal_size(path4, 1.0, 2)
        assert sorted(c.sizes.tolist()) == [2, 2]

    def test_five_nodes_differ_by_one(self):
        g = path_graph(5)
        c = spectral_equal_size(g, 1.0, 2)
        assert sorted(c.sizes.tolist()) == [2, 3]

    def test_k_too_large(self, path4):
        with pytest.raises(KTooLarge):
            spectral_equal_size(path4, 1.0, 9)


class TestConstrainedKmeans:
    def test_sizes_always_balanced(self):
        rng = np.random.default_rng(11)
        for n, k in [(10, 3), (9, 3), (7, 2), (12, 5)]:
            pts = rng.standard_normal((n, 2))
            labels = constrained_kmeans(pts, k, SolverConfig(seed=3))
            sizes = np.bincount(labels, minlength=k)
            assert sizes.max() - sizes.min() <= 1
            assert sizes.sum() == n
