"""Near-optimal clusterings via trace optimization.

Pipeline: build the penalized trace matrix, relax the partition constraint to
a unit-diagonal PSD matrix solved by ADMM, round with K-means on the top-K
eigenvectors, and sweep K keeping the best surrogate objective. The trivial
partitions (all singletons, one cluster) are always scored as candidates, so
the sweep never returns something worse than both.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ClusterDesignError, KTooLarge, NonSymmetric
from .graph import Graph
from .metrics import DesignReport, Heterogeneity, build_report, objective_abs, surrogate_hetero
from .partition import Clustering, make_clustering, trivial_partitions

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4000


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, iteration caps, and seeds for the SDP/eigen/K-means stack."""

    admm_rho: float = 1.0
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    max_iter: int = 5000
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 300
    seed: int = 0
    adaptive_rho: bool = True

    def __post_init__(self):
        if min(self.admm_rho, self.tol_primal, self.tol_dual) <= 0:
            raise ValueError("rho and tolerances must be > 0")
        if min(self.max_iter, self.kmeans_restarts, self.kmeans_max_iter) <= 0:
            raise ValueError("iteration caps and restarts must be > 0")


@dataclass(frozen=True)
class TraceMatrix:
    """Symmetrized score matrix whose within-cluster sum ranks partitions."""

    c: np.ndarray
    xi: float
    het: Heterogeneity | None = None

    @property
    def n(self) -> int:
        return self.c.shape[0]


def build_trace_matrix(
    g: Graph,
    xi: float,
    het: Heterogeneity | None = None,
    dense_limit: int = DENSE_LIMIT,
) -> TraceMatrix:
    """sym(n diag(alpha) V^-1 A - xi w w^T), with w = psi when given, else 1.

    Rows of V^-1 A are zero for isolated nodes. The homogeneous weight vector
    is all-ones: the outcome-scale bound enters through xi, not through w.
    """
    g.require_binary("build_trace_matrix")
    if g.n > dense_limit:
        raise ValueError(
            f"n={g.n} exceeds the dense-matrix guard ({dense_limit}); "
            "use spectral_equal_size or a baseline clusterer"
        )
    a = g.adjacency_matrix()
    deg = g.degrees.astype(float)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    lnorm = inv[:, None] * a
    alpha = Heterogeneity().alphas(g.n) if het is None else het.alphas(g.n)
    w = np.ones(g.n) if het is None or het.psi is None else het.psis(g.n)
    b = g.n * alpha[:, None] * lnorm - xi * np.outer(w, w)
    return TraceMatrix(c=(b + b.T) / 2.0, xi=xi, het=het)


def integral_trace_value(tm: TraceMatrix, c: Clustering) -> float:
    """Sum of the trace matrix over within-cluster blocks (tr C M M^T)."""
    total = 0.0
    for k in range(c.k):
        idx = c.members(k)
        total += float(tm.c[np.ix_(idx, idx)].sum())
    return total


# -- SDP via ADMM ---------------------------------------------------------


@dataclass
class SdpResult:
    """Feasible-projected ADMM solution with convergence diagnostics."""

    x: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    trace_log: list[tuple[int, float, float, float]] | None = None

    @property
    def max_iter_exceeded(self) -> bool:
        return not self.converged


def _project_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.maximum(w, 0.0)
    z = (v * w) @ v.T
    return (z + z.T) / 2.0


def solve_sdp(
    tm: TraceMatrix,
    cfg: SolverConfig | None = None,
    keep_log: bool = False,
    ridge: float = 0.0,
) -> SdpResult:
    """Maximize tr(C X) over unit-diagonal PSD X by ADMM splitting.

    X carries the affine constraint diag(X) = 1 exactly; Z carries the PSD
    cone via eigenvalue clipping. The objective matrix is normalized to
    Frobenius norm n internally so the penalty admm_rho = 1 starts at the
    problem's scale. The returned matrix is the X iterate, so its diagonal
    is exact and its minimum eigenvalue is bounded below by -tol_primal at
    convergence. If max_iter is hit the best feasible iterate so far is
    returned with converged=False.

    ``ridge`` > 0 maximizes tr(C X)/s - ridge ||X||_F^2 instead (s the
    internal scale). Since tr X = n is fixed, the ridge selects a
    flat-spectrum (high-rank) element of the near-optimal face, which is
    what K-means rounding needs; leave it 0 for the exact optimum value.
    """
    cfg = cfg or SolverConfig()
    c = tm.c
    if not np.allclose(c, c.T, rtol=0.0, atol=1e-10 * max(1.0, float(np.abs(c).max(initial=0.0)))):
        raise NonSymmetric("trace matrix must be symmetric")
    n = c.shape[0]
    scale = max(float(np.linalg.norm(c)) / n, 1e-12)
    cs = c / scale
    rho = cfg.admm_rho
    x = np.eye(n)
    z = np.eye(n)
    u = np.zeros((n, n))
    log: list[tuple[int, float, float, float]] | None = [] if keep_log else None
    it = 0
    r_norm = s_norm = math.inf
    best = (math.inf, x)
    for it in range(1, cfg.max_iter + 1):
        x = (cs + rho * (z - u)) / (rho + 2.0 * ridge)
        np.fill_diagonal(x, 1.0)
        z_prev = z
        z = _project_psd(x + u)
        u = u + x - z
        r_norm = float(np.linalg.norm(x - z))
        s_norm = rho * float(np.linalg.norm(z - z_prev))
        if log is not None:
            log.append((it, r_norm, s_norm, float(np.tensordot(c, x))))
        if r_norm + s_norm < best[0]:
            best = (r_norm + s_norm, x)
        if r_norm <= cfg.tol_primal and s_norm <= cfg.tol_dual:
            return SdpResult(x, float(np.tensordot(c, x)), it, r_norm, s_norm, True, log)
        # residual balancing, applied sparingly and frozen late: per-iteration
        # rescaling of u can cycle and stall convergence on small instances
        if cfg.adaptive_rho and it % 25 == 0 and it <= 2000:
            if r_norm > 10.0 * s_norm and rho < 1e8:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm and rho > 1e-8:
                rho /= 2.0
                u *= 2.0
    x = best[1]
    logger.warning("solve_sdp hit max_iter=%d (primal %.2e, dual %.2e)", cfg.max_iter, r_norm, s_norm)
    return SdpResult(x, float(np.tensordot(c, x)), it, r_norm, s_norm, False, log)


# -- eigendecomposition ---------------------------------------------------


def symmetric_eigen(m: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k eigenpairs of a symmetric matrix, eigenvalues descending.

    Each eigenvector is sign-fixed so its first nonzero component is
    positive, making the output deterministic across runs.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSymmetric("matrix must be square")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * scale):
        raise NonSymmetric("matrix is not symmetric")
    if not (1 <= k <= m.shape[0]):
        raise KTooLarge(f"k={k} outside 1..{m.shape[0]}")
    w, v = np.linalg.eigh((m + m.T) / 2.0)
    w = w[::-1][:k]
    v = v[:, ::-1][:, :k]
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12 * max(1.0, float(np.abs(col).max())))[0]
        if len(nz) and col[nz[0]] < 0:
            v[:, j] = -col
    return w.copy(), v


# -- K-means (plain and equal-size constrained) ---------------------------


def _seed_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def _dist2(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int) -> tuple[np.ndarray, float]:
    n = points.shape[0]
    centroids = _kmeans_pp_init(points, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _dist2(points, centroids)
        new_labels = np.argmin(d2, axis=1)
        # repair empties by splitting the largest cluster at its farthest point
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.nonzero(counts == 0)[0]:
            big = int(np.argmax(counts))
            members = np.nonzero(new_labels == big)[0]
            far = members[int(np.argmax(d2[members, big]))]
            new_labels[far] = empty
            counts[big] -= 1
            counts[empty] += 1
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            centroids[j] = points[labels == j].mean(axis=0)
    wcss = float(np.sum((points - centroids[labels]) ** 2))
    return labels, wcss


def kmeans(points: np.ndarray, k: int, cfg: SolverConfig | None = None, seed=None) -> np.ndarray:
    """Best-of-restarts seeded K-means++ labels; empty clusters are repaired."""
    cfg = cfg or SolverConfig()
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k > n:
        raise KTooLarge(f"K={k} exceeds number of points {n}")
    if k < 1:
        raise KTooLarge("K must be >= 1")
    base = _seed_tuple(cfg.seed if seed is None else seed)
    best_labels, best_wcss = None, math.inf
    for restart in range(cfg.kmeans_restarts):
        rng = np.random.default_rng((*base, restart))
        labels, wcss = _lloyd(points, k, rng, cfg.kmeans_max_iter)
        if wcss < best_wcss - 1e-15:
            best_labels, best_wcss = labels, wcss
    return best_labels


def _constrained_assign(d2: np.ndarray, k: int) -> np.ndarray:
    """Greedy capacity-capped assignment; sizes end up differing by <= 1."""
    n = d2.shape[0]
    floor_cap = n // k
    labels = np.full(n, -1, dtype=np.int64)
    sizes = np.zeros(k, dtype=np.int64)
    order = np.argsort(d2, axis=None, kind="stable")
    pairs = np.column_stack(np.unravel_index(order, d2.shape))
    assigned = 0
    for cap in (floor_cap, floor_cap + 1):
        if cap == 0:
            continue
        for i, j in pairs:
            if assigned == n:
                break
            if labels[i] < 0 and sizes[j] < cap:
                labels[i] = j
                sizes[j] += 1
                assigned += 1
    return labels


def constrained_kmeans(points: np.ndarray, k: int, cfg: SolverConfig | None = None, seed=None) -> np.ndarray:
    """Equal-size K-means: greedy capped assignment plus capped Lloyd sweeps."""
    cfg = cfg or SolverConfig()
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k > n:
        raise KTooLarge(f"K={k} exceeds number of points {n}")
    base = _seed_tuple(cfg.seed if seed is None else seed)
    best_labels, best_wcss = None, math.inf
    for restart in range(cfg.kmeans_restarts):
        rng = np.random.default_rng((*base, restart))
        centroids = _kmeans_pp_init(points, k, rng)
        labels = np.full(n, -1, dtype=np.int64)
        for _ in range(cfg.kmeans_max_iter):
            new_labels = _constrained_assign(_dist2(points, centroids), k)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for j in range(k):
                centroids[j] = points[labels == j].mean(axis=0)
        wcss = float(np.sum((points - centroids[labels]) ** 2))
        if wcss < best_wcss - 1e-15:
            best_labels, best_wcss = labels, wcss
    return best_labels


# -- rounding and the K sweep ---------------------------------------------


def _gram_embedding(vals: np.ndarray, vecs: np.ndarray, k: int) -> np.ndarray:
    """Rows of U_k sqrt(max(lambda, 0)): the rank-k Gram factor of a PSD matrix.

    Plain eigenvectors of a nearly low-rank solution give unit-norm noise in
    the zero-eigenvalue directions; weighting by sqrt(lambda) keeps the
    K-means step on the actual geometry of X.
    """
    return vecs[:, :k] * np.sqrt(np.maximum(vals[:k], 0.0))


def round_to_clusters(x: np.ndarray, k: int, cfg: SolverConfig | None = None, seed=None) -> Clustering:
    """K-means on the (sqrt-eigenvalue scaled) top-K eigenvectors of X."""
    if k > x.shape[0]:
        raise KTooLarge(f"K={k} exceeds n={x.shape[0]}")
    vals, vecs = symmetric_eigen(x, k)
    labels = kmeans(_gram_embedding(vals, vecs, k), k, cfg, seed=seed)
    return make_clustering(labels.tolist(), x.shape[0])


def _sweep_objective(g: Graph, c: Clustering, xi: float, het: Heterogeneity | None) -> float:
    if het is not None and het.psi is not None:
        return surrogate_hetero(g, c, xi, het)
    return objective_abs(g, c, xi, het)


def refine_labels(
    g: Graph,
    labels: np.ndarray,
    xi: float,
    het: Heterogeneity | None = None,
    max_rounds: int = 20,
) -> np.ndarray:
    """Greedy descent on the size-penalized cut objective from a warm start.

    Alternates two deterministic phases until neither improves: node sweeps
    (move a node to a neighboring cluster or a fresh one when that strictly
    lowers the objective) and cluster merges (join an adjacent pair when the
    cut saving beats the size penalty). Cleans up the K-means rounding,
    which has no view of the exact objective.
    """
    n = g.n
    h = het or Heterogeneity()
    alpha = h.alphas(n)
    w = h.psis(n) if h.psi is not None else np.ones(n)
    deg = g.degrees
    bias_w = np.divide(alpha, deg, out=np.zeros(n, dtype=float), where=deg > 0)
    labels = np.array(labels, dtype=np.int64)
    sums = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        sums[labels[i]] += w[i]
        counts[labels[i]] += 1
    size_scale = xi / (n * n)
    edges = [(u, v) for u, v, _ in g.edges()]

    def node_sweeps() -> bool:
        any_move = False
        for _ in range(50):
            moved = False
            for i in range(n):
                a = labels[i]
                cnt: dict[int, float] = {}
                nbr_bias: dict[int, float] = {}
                for j in g.neighbors(i):
                    lab = labels[j]
                    cnt[lab] = cnt.get(lab, 0) + 1
                    nbr_bias[lab] = nbr_bias.get(lab, 0.0) + bias_w[j]
                targets = [lab for lab in cnt if lab != a]
                if counts[a] > 1:
                    empty = np.nonzero(counts == 0)[0]
                    if len(empty):
                        targets.append(int(empty[0]))
                best_delta, best_b = -1e-12, -1
                for b in targets:
                    d_size = 2.0 * w[i] * (sums[b] - sums[a]) + 2.0 * w[i] ** 2
                    d_bias = bias_w[i] * (cnt.get(a, 0) - cnt.get(b, 0))
                    d_bias += nbr_bias.get(a, 0.0) - nbr_bias.get(b, 0.0)
                    delta = size_scale * d_size + d_bias / n
                    if delta < best_delta:
                        best_delta, best_b = delta, b
                if best_b >= 0:
                    sums[a] -= w[i]
                    counts[a] -= 1
                    sums[best_b] += w[i]
                    counts[best_b] += 1
                    labels[i] = best_b
                    moved = any_move = True
            if not moved:
                break
        return any_move

    def merge_pass() -> bool:
        merged_any = False
        while True:
            cut: dict[tuple[int, int], float] = {}
            for u, v in edges:
                a, b = labels[u], labels[v]
                if a != b:
                    key = (a, b) if a < b else (b, a)
                    cut[key] = cut.get(key, 0.0) + bias_w[u] + bias_w[v]
            best_delta, best_pair = -1e-12, None
            for (a, b), saving in cut.items():
                delta = size_scale * 2.0 * sums[a] * sums[b] - saving / n
                if delta < best_delta:
                    best_delta, best_pair = delta, (a, b)
            if best_pair is None:
                return merged_any
            a, b = best_pair
            labels[labels == b] = a
            sums[a] += sums[b]
            counts[a] += counts[b]
            sums[b] = 0.0
            counts[b] = 0
            merged_any = True

    for _ in range(max_rounds):
        improved = node_sweeps()
        improved |= merge_pass()
        if not improved:
            break
    return labels


def resolve_xi(xi: float | None, het: Heterogeneity | None) -> float:
    """Default xi when not supplied: 1/phi^2 (heterogeneous) or psi/(lam phi^2)."""
    if xi is not None:
        return xi
    h = het or Heterogeneity()
    if h.phi_bar <= 0:
        raise ValueError("cannot derive xi without phi_bar > 0")
    if h.psi is not None:
        return 1.0 / h.phi_bar**2
    return h.psi_bar / (h.lam * h.phi_bar**2)


def causal_cluster(
    g: Graph,
    xi: float | None,
    k_min: int,
    k_max: int,
    het: Heterogeneity | None = None,
    cfg: SolverConfig | None = None,
    jobs: int = 1,
    resolve_per_k: bool = False,
    sdp_log: list | None = None,
    ridge: float = 0.01,
    refine: bool = True,
) -> tuple[Clustering, DesignReport]:
    """Sweep K in [k_min, k_max]: solve the SDP, round, keep the best objective.

    The SDP does not depend on K, so by default it is solved once and the
    rounding reuses its eigenvectors across the sweep; ``resolve_per_k``
    re-solves per K instead. The rounding solve uses a small spectral
    ``ridge`` (flat-spectrum face selection). Unless ``refine`` is off, each
    rounded candidate is polished by greedy descent on the exact objective,
    and descent runs seeded at the two trivial designs join the pool; the
    raw trivial partitions always enter the comparison untouched. Each K
    derives its own K-means RNG stream from (cfg.seed, K). A list passed as
    ``sdp_log`` collects the shared solve's (iteration, primal, dual,
    objective) rows. Returns the winning clustering and its report.
    """
    g.require_binary("causal_cluster")
    cfg = cfg or SolverConfig()
    if not (1 <= k_min <= k_max <= g.n):
        raise KTooLarge(f"need 1 <= k_min <= k_max <= n, got [{k_min}, {k_max}] with n={g.n}")
    xi = resolve_xi(xi, het)
    tm = build_trace_matrix(g, xi, het)
    shared = None if resolve_per_k else solve_sdp(tm, cfg, keep_log=sdp_log is not None, ridge=ridge)
    shared_vals = shared_vecs = None
    if shared is not None:
        if sdp_log is not None and shared.trace_log:
            sdp_log.extend(shared.trace_log)
        shared_vals, shared_vecs = symmetric_eigen(shared.x, min(k_max, g.n))

    def candidate_for(k: int) -> Clustering | None:
        try:
            if shared_vecs is not None:
                emb = _gram_embedding(shared_vals, shared_vecs, k)
                labels = kmeans(emb, k, cfg, seed=(cfg.seed, k))
            else:
                res = solve_sdp(tm, cfg, ridge=ridge)
                vals, vecs = symmetric_eigen(res.x, k)
                labels = kmeans(_gram_embedding(vals, vecs, k), k, cfg, seed=(cfg.seed, k))
            if refine:
                labels = refine_labels(g, labels, xi, het)
            return make_clustering(labels.tolist(), g.n)
        except ClusterDesignError as exc:
            logger.warning("K=%d skipped: %s: %s", k, type(exc).__name__, exc)
            return None

    ks = list(range(k_min, k_max + 1))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            swept = list(pool.map(candidate_for, ks))
    else:
        swept = [candidate_for(k) for k in ks]

    candidates = [c for c in swept if c is not None]
    if refine:
        # greedy descent seeded at the two trivial designs joins the pool
        for seed_labels in (np.arange(g.n), np.zeros(g.n, dtype=np.int64)):
            polished = refine_labels(g, seed_labels, xi, het)
            candidates.append(make_clustering(polished.tolist(), g.n))
    singleton, single = trivial_partitions(g.n)
    candidates += [singleton, single]
    best = min(candidates, key=lambda c: _sweep_objective(g, c, xi, het))
    return best, build_report(g, best, xi, het)


def spectral_equal_size(
    g: Graph,
    xi: float,
    k: int,
    cfg: SolverConfig | None = None,
) -> Clustering:
    """Equal-size relaxation: constrained K-means on the trace matrix spectrum."""
    g.require_binary("spectral_equal_size")
    cfg = cfg or SolverConfig()
    if k > g.n:
        raise KTooLarge(f"K={k} exceeds n={g.n}")
    tm = build_trace_matrix(g, xi)
    _, vecs = symmetric_eigen(tm.c, k)
    labels = constrained_kmeans(vecs, k, cfg)
    return make_clustering(labels.tolist(), g.n)
