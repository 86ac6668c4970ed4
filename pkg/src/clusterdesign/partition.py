"""Partitions of the node set into nonempty clusters.

Cluster labels are canonicalized to dense 0-based integers in order of first
appearance, so equal partitions compare equal and file formats stay stable.
"""

from __future__ import annotations

import csv
from collections.abc import Sequence
from typing import TextIO

import numpy as np

from .errors import DuplicateNode, LengthMismatch, MissingNode, UnknownNode
from .graph import Graph


class Clustering:
    """Exhaustive, mutually exclusive assignment of n nodes to K clusters."""

    def __init__(self, assignment: np.ndarray, k: int, sizes: np.ndarray):
        self.assignment = assignment
        self.k = int(k)
        self.sizes = sizes
        self.assignment.flags.writeable = False
        self.sizes.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.assignment)

    def members(self, k: int) -> np.ndarray:
        return np.nonzero(self.assignment == k)[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Clustering)
            and self.k == other.k
            and np.array_equal(self.assignment, other.assignment)
        )

    def __repr__(self) -> str:
        return f"Clustering(n={self.n}, K={self.k})"


def make_clustering(labels: Sequence, n: int) -> Clustering:
    """Canonicalize arbitrary cluster labels for ``n`` nodes."""
    if len(labels) != n:
        raise LengthMismatch(f"got {len(labels)} labels for {n} nodes")
    remap: dict = {}
    assignment = np.empty(n, dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab not in remap:
            remap[lab] = len(remap)
        assignment[i] = remap[lab]
    k = len(remap)
    sizes = np.bincount(assignment, minlength=k)
    return Clustering(assignment, k, sizes)


def trivial_partitions(n: int) -> tuple[Clustering, Clustering]:
    """The singleton (K=n, Bernoulli design) and single-cluster partitions."""
    if n < 1:
        raise ValueError("n must be >= 1")
    singleton = make_clustering(list(range(n)), n)
    single = make_clustering([0] * n, n)
    return singleton, single


def save_clustering(c: Clustering, g: Graph, sink: TextIO) -> None:
    """Write ``node,cluster`` CSV rows using the graph's external labels."""
    sink.write("node,cluster\n")
    for i in range(c.n):
        sink.write(f"{g.labels[i]},{c.assignment[i]}\n")


def load_clustering(source: TextIO, g: Graph) -> Clustering:
    """Read a ``node,cluster`` CSV; every graph node must appear exactly once."""
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header[:2]] != ["node", "cluster"]:
        raise UnknownNode("expected CSV header 'node,cluster'")
    raw: list = [None] * g.n
    for row in reader:
        if not row:
            continue
        if len(row) < 2:
            raise UnknownNode(f"malformed row {row!r}")
        label, cluster = row[0].strip(), row[1].strip()
        if label not in g._index:
            raise UnknownNode(f"node {label!r} is not in the graph")
        idx = g.index_of(label)
        if raw[idx] is not None:
            raise DuplicateNode(f"node {label!r} appears more than once")
        raw[idx] = cluster
    for i, val in enumerate(raw):
        if val is None:
            raise MissingNode(f"node {g.labels[i]!r} has no cluster row")
    return make_clustering(raw, g.n)
