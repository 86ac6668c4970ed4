"""Undirected graphs: ingestion, thresholding, synthetic generators.

A :class:`Graph` is immutable after construction. Edges are stored once per
unordered pair with a strictly positive weight (weight 1.0 on binary graphs);
zero-weight pairs are simply absent. External node labels map bijectively to
internal indices ``0..n-1``.
"""

from __future__ import annotations

import io
import math
from collections.abc import Iterable, Mapping
from typing import TextIO

import numpy as np

from .errors import EmptyGraph, MalformedLine, NegativeWeight, NotBinary


class Graph:
    """Undirected weighted graph with an external-label index."""

    def __init__(
        self,
        n: int,
        weights: Mapping[tuple[int, int], float],
        labels: Iterable[str] | None = None,
        coords: np.ndarray | None = None,
    ):
        if n <= 0:
            raise EmptyGraph("graph must contain at least one node")
        self.n = int(n)
        canon: dict[tuple[int, int], float] = {}
        for (u, v), w in weights.items():
            if u == v:
                raise MalformedLine(f"self-loop on node index {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise MalformedLine(f"edge ({u},{v}) outside node range 0..{n - 1}")
            if w < 0:
                raise NegativeWeight(f"edge ({u},{v}) has negative weight {w}")
            if w == 0:
                continue
            key = (u, v) if u < v else (v, u)
            # duplicates collapse to the max weight (order-independent)
            canon[key] = max(w, canon.get(key, 0.0))
        self._weights = canon
        self.labels = tuple(str(i) for i in range(n)) if labels is None else tuple(labels)
        if len(self.labels) != n or len(set(self.labels)) != n:
            raise MalformedLine("labels must be a bijection onto 0..n-1")
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        nbr: list[list[int]] = [[] for _ in range(n)]
        for u, v in canon:
            nbr[u].append(v)
            nbr[v].append(u)
        self._neighbors = tuple(tuple(sorted(a)) for a in nbr)
        self._degrees = np.array([len(a) for a in self._neighbors], dtype=np.int64)
        self._degrees.flags.writeable = False

    # -- basic accessors -------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self._weights)

    def edges(self) -> list[tuple[int, int, float]]:
        """Edges as (u, v, w) with u < v, sorted for deterministic output."""
        return [(u, v, self._weights[(u, v)]) for u, v in sorted(self._weights)]

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def degree(self, i: int) -> int:
        return int(self._degrees[i])

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    def weight(self, u: int, v: int) -> float:
        key = (u, v) if u < v else (v, u)
        return self._weights.get(key, 0.0)

    def index_of(self, label: str) -> int:
        return self._index[label]

    @property
    def is_binary(self) -> bool:
        return all(w == 1.0 for w in self._weights.values())

    def require_binary(self, what: str) -> None:
        if not self.is_binary:
            raise NotBinary(f"{what} requires a binary graph; threshold weighted input first")

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for (u, v), w in self._weights.items():
            a[u, v] = w
            a[v, u] = w
        return a

    def hop_distances(self, source: int, cutoff: int | None = None) -> np.ndarray:
        """BFS hop distances from ``source``; unreachable nodes get -1."""
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[source] = 0
        frontier = [source]
        d = 0
        while frontier and (cutoff is None or d < cutoff):
            d += 1
            nxt = []
            for u in frontier:
                for v in self._neighbors[u]:
                    if dist[v] < 0:
                        dist[v] = d
                        nxt.append(v)
            frontier = nxt
        return dist

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.labels == other.labels
            and self._weights == other._weights
        )

    def __repr__(self) -> str:
        kind = "binary" if self.is_binary else "weighted"
        return f"Graph(n={self.n}, edges={self.num_edges}, {kind})"


# -- serialization -------------------------------------------------------


def load_edge_list(source: TextIO | str) -> Graph:
    """Parse a tab-separated edge list into a Graph.

    Data lines are ``u <TAB> v [<TAB> w]``; ``node u`` declares an isolated
    node; ``#`` starts a comment line. Duplicate (u, v) entries collapse to
    the maximum weight.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    order: dict[str, int] = {}
    raw_edges: list[tuple[str, str, float]] = []

    def intern(label: str) -> None:
        if label not in order:
            order[label] = len(order)

    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if parts[0] == "node":
            if len(parts) != 2:
                raise MalformedLine(f"line {lineno}: 'node' takes exactly one label")
            intern(parts[1])
            continue
        if len(parts) not in (2, 3):
            raise MalformedLine(f"line {lineno}: expected 2 or 3 fields, got {len(parts)}")
        u, v = parts[0], parts[1]
        if u == v:
            raise MalformedLine(f"line {lineno}: self-loop on {u!r}")
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise MalformedLine(f"line {lineno}: non-numeric weight {parts[2]!r}") from None
            if math.isnan(w):
                raise MalformedLine(f"line {lineno}: NaN weight")
        else:
            w = 1.0
        if w < 0:
            raise NegativeWeight(f"line {lineno}: negative weight {w}")
        intern(u)
        intern(v)
        raw_edges.append((u, v, w))

    if not order:
        raise EmptyGraph("edge list declares no nodes")
    n = len(order)
    weights: dict[tuple[int, int], float] = {}
    for u, v, w in raw_edges:
        if w == 0:
            continue
        key = (order[u], order[v])
        if key[0] > key[1]:
            key = (key[1], key[0])
        weights[key] = max(w, weights.get(key, 0.0))
    return Graph(n, weights, labels=order.keys())


def save_edge_list(g: Graph, sink: TextIO) -> None:
    """Write ``g`` so that load_edge_list round-trips it (labels included)."""
    covered = np.zeros(g.n, dtype=bool)
    for u, v, w in g.edges():
        covered[u] = covered[v] = True
        if w == 1.0:
            sink.write(f"{g.labels[u]}\t{g.labels[v]}\n")
        else:
            sink.write(f"{g.labels[u]}\t{g.labels[v]}\t{w!r}\n")
    for i in range(g.n):
        if not covered[i]:
            sink.write(f"node\t{g.labels[i]}\n")


# -- thresholding --------------------------------------------------------


def threshold(g: Graph, percentile: float) -> Graph:
    """Binarize a weighted graph at an empirical weight percentile.

    Edges with weight strictly above the given percentile of the nonzero
    weights are kept with weight 1; the node set is unchanged. Percentile 0
    keeps every stored edge, percentile 100 keeps none.
    """
    if not (0.0 <= percentile <= 100.0):
        raise ValueError("percentile must lie in [0, 100]")
    wts = [w for _, _, w in g.edges()]
    if not wts:
        return Graph(g.n, {}, labels=g.labels, coords=g.coords)
    cutoff = 0.0 if percentile == 0 else float(np.percentile(wts, percentile))
    kept = {(u, v): 1.0 for u, v, w in g.edges() if w > cutoff}
    return Graph(g.n, kept, labels=g.labels, coords=g.coords)


# -- synthetic generators ------------------------------------------------


def generate_geometric(n: int, seed: int) -> Graph:
    """Random geometric graph on [-1, 1]^2 under the halved-L1 metric.

    Nodes connect when |x_i1 - x_j1|/2 + |x_i2 - x_j2|/2 <= r_n with
    r_n = sqrt(4 / (2.75 n)). Coordinates are kept as node metadata.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(n, 2))
    r = math.sqrt(4.0 / (2.75 * n))
    weights: dict[tuple[int, int], float] = {}
    for i in range(n):
        d = 0.5 * np.abs(pts[i + 1 :] - pts[i]).sum(axis=1)
        for off in np.nonzero(d <= r)[0]:
            weights[(i, i + 1 + int(off))] = 1.0
    return Graph(n, weights, coords=pts)


def generate_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Erdős–Rényi G(n, p): each unordered pair is an independent edge."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    weights = {(int(a), int(b)): 1.0 for a, b in zip(iu[mask], ju[mask])}
    return Graph(n, weights)


def generate_barabasi(n: int, seed: int, seed_block: int | None = None) -> Graph:
    """Preferential-attachment graph grown from an Erdős–Rényi seed block.

    The first ``seed_block`` nodes (default floor(n/5)) form an ER block with
    p = 10/n; each remaining node then attaches to one existing node chosen
    with probability proportional to current degree. A node arriving while
    total degree is zero attaches uniformly at random.
    """
    if n < 5:
        raise ValueError("n must be >= 5")
    m0 = n // 5 if seed_block is None else int(seed_block)
    if not (1 <= m0 <= n):
        raise ValueError("seed_block must lie in 1..n")
    rng = np.random.default_rng(seed)
    p = 10.0 / n
    weights: dict[tuple[int, int], float] = {}
    deg = np.zeros(n, dtype=np.int64)
    if m0 >= 2:
        iu, ju = np.triu_indices(m0, k=1)
        mask = rng.random(len(iu)) < p
        for a, b in zip(iu[mask], ju[mask]):
            weights[(int(a), int(b))] = 1.0
            deg[a] += 1
            deg[b] += 1
    for new in range(m0, n):
        total = deg[:new].sum()
        if total == 0:
            target = int(rng.integers(new))
        else:
            target = int(rng.choice(new, p=deg[:new] / total))
        weights[(target, new)] = 1.0
        deg[target] += 1
        deg[new] += 1
    return Graph(n, weights)


def power_graph(g: Graph, d: int) -> Graph:
    """Connect every pair at hop distance between 1 and ``d`` in ``g``."""
    g.require_binary("power_graph")
    if d < 1:
        raise ValueError("hop count d must be >= 1")
    if d == 1:
        return Graph(g.n, dict(g._weights), labels=g.labels, coords=g.coords)
    weights: dict[tuple[int, int], float] = {}
    for i in range(g.n):
        dist = g.hop_distances(i, cutoff=d)
        for j in np.nonzero(dist > 0)[0]:
            if i < j:
                weights[(i, int(j))] = 1.0
    return Graph(g.n, weights, labels=g.labels, coords=g.coords)
