"""Reference clusterers used as benchmarks for the trace-optimized design."""

from __future__ import annotations

import networkx as nx
import numpy as np

from .errors import KTooLarge
from .graph import Graph
from .optimizer import SolverConfig, build_trace_matrix, kmeans, symmetric_eigen
from .partition import Clustering, make_clustering


def epsilon_net(g: Graph, eps: int, seed: int) -> Clustering:
    """Greedy hop-distance net: seeds pairwise >= eps apart, nearest-seed cells.

    Nodes are scanned in a seed-shuffled order; a node becomes a net seed
    when every existing seed is at hop distance >= eps. Each node then joins
    its nearest seed, ties going to the smallest seed node index. Components
    without a seed cannot occur: the first scanned node of each component is
    at infinite distance from all seeds.
    """
    g.require_binary("epsilon_net")
    if eps < 1:
        raise ValueError("eps must be >= 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(g.n)
    inf = np.iinfo(np.int64).max
    # nearest-seed distance and the seed attaining it (smallest index on ties)
    best_dist = np.full(g.n, inf, dtype=np.int64)
    best_seed = np.full(g.n, -1, dtype=np.int64)
    seeds: list[int] = []
    for cand in order:
        cand = int(cand)
        if best_dist[cand] >= eps:
            seeds.append(cand)
            dist = g.hop_distances(cand)
            reach = dist >= 0
            closer = reach & (dist < best_dist)
            tie = reach & (dist == best_dist) & (cand < best_seed)
            upd = closer | tie
            best_dist[upd] = dist[upd]
            best_seed[upd] = cand
    return make_clustering(best_seed.tolist(), g.n)


def spectral_fixed(g: Graph, k: int | None = None, seed: int = 0) -> Clustering:
    """Spectral clustering with a fixed cluster count (default n/3).

    K-means on the top-K eigenvectors of the symmetrized degree-normalized
    adjacency; shares the optimizer's spectral machinery with xi = 0.
    """
    g.require_binary("spectral_fixed")
    if k is None:
        k = max(1, g.n // 3)
    if k > g.n:
        raise KTooLarge(f"K={k} exceeds n={g.n}")
    cfg = SolverConfig(seed=seed)
    tm = build_trace_matrix(g, xi=0.0)
    _, vecs = symmetric_eigen(tm.c, k)
    labels = kmeans(vecs, k, cfg)
    return make_clustering(labels.tolist(), g.n)


def louvain(g: Graph, seed: int) -> Clustering:
    """Greedy modularity communities (resolution 1, gain threshold 1e-9)."""
    if g.num_edges == 0:
        return make_clustering(list(range(g.n)), g.n)
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_weighted_edges_from(g.edges())
    communities = nx.algorithms.community.louvain_communities(
        nxg, weight="weight", resolution=1.0, threshold=1e-9, seed=seed
    )
    labels = np.empty(g.n, dtype=np.int64)
    for cid, members in enumerate(communities):
        for node in members:
            labels[node] = cid
    return make_clustering(labels.tolist(), g.n)


def random_balanced(g: Graph, k: int, seed: int) -> Clustering:
    """Uniformly random partition with cluster sizes differing by at most 1."""
    if k > g.n:
        raise KTooLarge(f"K={k} exceeds n={g.n}")
    if k < 1:
        raise KTooLarge("K must be >= 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.n)
    labels = np.empty(g.n, dtype=np.int64)
    base, extra = divmod(g.n, k)
    start = 0
    for j in range(k):
        size = base + (1 if j < extra else 0)
        labels[perm[start : start + size]] = j
        start += size
    return make_clustering(labels.tolist(), g.n)
