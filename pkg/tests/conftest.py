"""Shared fixtures: small named graphs and exhaustive-enumeration helpers."""

from __future__ import annotations

import numpy as np
import pytest

from clusterdesign.graph import (
    Graph,
    generate_barabasi,
    generate_erdos_renyi,
    generate_geometric,
    load_edge_list,
)


def path_graph(n: int) -> Graph:
    return Graph(n, {(i, i + 1): 1.0 for i in range(n - 1)})


def cycle_graph(n: int) -> Graph:
    w = {(i, i + 1): 1.0 for i in range(n - 1)}
    w[(0, n - 1)] = 1.0
    return Graph(n, w)


def complete_graph(n: int) -> Graph:
    return Graph(n, {(i, j): 1.0 for i in range(n) for j in range(i + 1, n)})


def two_triangles() -> Graph:
    return load_edge_list("0\t1\n1\t2\n0\t2\n3\t4\n4\t5\n3\t5\n")


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, {(0, i): 1.0 for i in range(1, leaves + 1)})


def with_isolated(g: Graph, extra: int) -> Graph:
    return Graph(g.n + extra, dict(g._weights))


@pytest.fixture
def path4() -> Graph:
    return path_graph(4)


@pytest.fixture
def triangles() -> Graph:
    return two_triangles()


def small_corpus() -> list[tuple[str, Graph]]:
    """Named graphs with n <= 10 used by the exhaustive/acceptance suites."""
    return [
        ("path4", path_graph(4)),
        ("cycle6", cycle_graph(6)),
        ("two_triangles", two_triangles()),
        ("star5", star_graph(5)),
        ("complete5", complete_graph(5)),
        ("er8", generate_erdos_renyi(8, 0.35, seed=3)),
        ("er10", generate_erdos_renyi(10, 0.30, seed=11)),
        ("geo10", generate_geometric(10, seed=1)),
        ("ba10", generate_barabasi(10, seed=2)),
        ("iso7", with_isolated(generate_erdos_renyi(6, 0.5, seed=4), 1)),
    ]


def corpus_n8() -> list[tuple[str, Graph]]:
    return [(name, g) for name, g in small_corpus() if g.n <= 8]


# -- exhaustive partition enumeration --------------------------------------


def all_partitions(n: int) -> np.ndarray:
    """Every set partition of {0..n-1} as canonical label rows (Bell(n) x n)."""
    rows: list[list[int]] = []

    def grow(prefix: list[int], kmax: int):
        if len(prefix) == n:
            rows.append(prefix.copy())
            return
        for lab in range(kmax + 1):
            prefix.append(lab)
            grow(prefix, max(kmax, lab + 1))
            prefix.pop()

    grow([0], 1)
    return np.array(rows, dtype=np.int64)


def partition_tables(g: Graph, labs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per partition row: unweighted bias fraction B and size term S = sum n_k^2."""
    n = g.n
    deg = g.degrees.astype(float)
    edges = [(u, v) for u, v, _ in g.edges()]
    if edges:
        eu = np.array([u for u, _ in edges])
        ev = np.array([v for _, v in edges])
        wts = 1.0 / deg[eu] + 1.0 / deg[ev]
        cross = labs[:, eu] != labs[:, ev]
        b = cross @ wts / n
    else:
        b = np.zeros(len(labs))
    iu, ju = np.triu_indices(n, k=1)
    same = labs[:, iu] == labs[:, ju]
    s = n + 2.0 * same.sum(axis=1)
    return b, s


def brute_force_objective_abs(g: Graph, xi: float, labs: np.ndarray | None = None) -> float:
    """Global minimum of the size-penalized cut objective over all partitions."""
    if labs is None:
        labs = all_partitions(g.n)
    b, s = partition_tables(g, labs)
    return float(np.min(xi * s / g.n**2 + b))


def brute_force_trace_max(g: Graph, xi: float, labs: np.ndarray | None = None) -> float:
    """Global maximum of the within-cluster trace value over all partitions."""
    if labs is None:
        labs = all_partitions(g.n)
    b, s = partition_tables(g, labs)
    non_isolated = int((g.degrees > 0).sum())
    return float(np.max(g.n * non_isolated - g.n**2 * b - xi * s))
