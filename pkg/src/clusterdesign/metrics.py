"""Worst-case bias/variance metrics and the cluster-vs-Bernoulli decision.

All operations take a binary graph; weighted graphs must be thresholded
first. Isolated nodes contribute zero to the bias sum (no neighbors, no
spillover) and are counted in n everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyGrid
from .graph import Graph
from .partition import Clustering


@dataclass(frozen=True)
class Heterogeneity:
    """Per-unit spillover/covariance bounds and the bias-weight lambda.

    alpha scales each unit's spillover sensitivity (max alpha = 1 by
    normalization); psi bounds |mu_i(1)+mu_i(0)| per unit; psi_bar is the
    global squared bound; phi_bar the largest spillover magnitude. psi_lower
    is the optional lower-bound constant, carried but unused by decisions.
    """

    alpha: np.ndarray | None = None
    psi: np.ndarray | None = None
    psi_bar: float = 1.0
    phi_bar: float = 1.0
    lam: float = 1.0
    psi_lower: float | None = None

    def __post_init__(self):
        if self.psi_bar <= 0:
            raise ValueError("psi_bar must be > 0")
        if self.phi_bar < 0:
            raise ValueError("phi_bar must be >= 0")
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if self.alpha is not None:
            a = np.asarray(self.alpha, dtype=float)
            if np.any(a <= 0) or np.any(a > 1):
                raise ValueError("alpha entries must lie in (0, 1]")
            if not math.isclose(a.max(), 1.0, rel_tol=0, abs_tol=1e-12):
                raise ValueError("alpha must be normalized so max(alpha) = 1")
            object.__setattr__(self, "alpha", a)
        if self.psi is not None:
            p = np.asarray(self.psi, dtype=float)
            if np.any(p < 0):
                raise ValueError("psi entries must be >= 0")
            if p.max(initial=0.0) ** 2 > self.psi_bar * (1 + 1e-12):
                raise ValueError("psi_bar must dominate max(psi)^2")
            object.__setattr__(self, "psi", p)

    def alphas(self, n: int) -> np.ndarray:
        return np.ones(n) if self.alpha is None else self.alpha

    def psis(self, n: int) -> np.ndarray:
        if self.psi is None:
            return np.full(n, math.sqrt(self.psi_bar))
        return self.psi


def cross_counts(g: Graph, c: Clustering) -> np.ndarray:
    """Per node, the number of its neighbors assigned to other clusters."""
    out = np.zeros(g.n, dtype=np.int64)
    lab = c.assignment
    for i in range(g.n):
        li = lab[i]
        out[i] = sum(1 for j in g.neighbors(i) if lab[j] != li)
    return out


def bias_fraction(g: Graph, c: Clustering, het: Heterogeneity | None = None) -> float:
    """Average alpha-weighted share of a unit's neighbors in other clusters."""
    g.require_binary("bias_fraction")
    het = het or Heterogeneity()
    alpha = het.alphas(g.n)
    deg = g.degrees
    cross = cross_counts(g, c)
    active = deg > 0
    total = float(np.sum(alpha[active] * cross[active] / deg[active]))
    return total / g.n


def worst_case_bias(g: Graph, c: Clustering, het: Heterogeneity | None = None) -> float:
    """Largest achievable |E[tau_hat] - tau| for this design: phi_bar x bias_fraction."""
    het = het or Heterogeneity()
    return het.phi_bar * bias_fraction(g, c, het)


def variance_proxy(c: Clustering) -> float:
    """Cluster-size concentration (1/n^2) sum_k n_k^2, in [1/K, 1]."""
    n = c.n
    return float(np.sum(c.sizes.astype(float) ** 2)) / (n * n)


def objective_sq(g: Graph, c: Clustering, xi: float, het: Heterogeneity | None = None) -> float:
    """Ranking metric: xi x variance proxy + squared bias fraction."""
    if xi < 0:
        raise ValueError("xi must be >= 0")
    return xi * variance_proxy(c) + bias_fraction(g, c, het) ** 2


def objective_abs(g: Graph, c: Clustering, xi: float, het: Heterogeneity | None = None) -> float:
    """Surrogate upper-bound loss: xi x variance proxy + absolute bias fraction."""
    if xi < 0:
        raise ValueError("xi must be >= 0")
    return xi * variance_proxy(c) + bias_fraction(g, c, het)


def objective_hetero(g: Graph, c: Clustering, het: Heterogeneity) -> float:
    """Worst-case MSE under per-unit heterogeneity.

    sum_k (n_k/n)^2 ((1/n_k) sum_{i in k} psi_i)^2
    + (phi_bar x alpha-weighted bias fraction)^2.
    """
    psi = het.psis(g.n)
    n = g.n
    var_term = 0.0
    for k in range(c.k):
        var_term += float(psi[c.members(k)].sum()) ** 2
    var_term /= n * n
    return var_term + (het.phi_bar * bias_fraction(g, c, het)) ** 2


def surrogate_hetero(g: Graph, c: Clustering, xi: float, het: Heterogeneity) -> float:
    """Heterogeneous analog of objective_abs: psi-weighted size penalty + bias fraction."""
    psi = het.psis(g.n)
    n = g.n
    var_term = 0.0
    for k in range(c.k):
        var_term += float(psi[c.members(k)].sum()) ** 2
    return xi * var_term / (n * n) + bias_fraction(g, c, het)


def xi_threshold(g: Graph, c: Clustering, het: Heterogeneity | None = None) -> float:
    """Largest xi at which this cluster design beats the Bernoulli design."""
    b = bias_fraction(g, c, het)
    return (1.0 - b * b) / variance_proxy(c)


@dataclass(frozen=True)
class RuleOfThumb:
    """Outcome of the cluster-vs-Bernoulli rule with the minimal phi_bar."""

    decision: str
    phi_min: float
    phi_min_sqrt_k: float
    bias_frac: float
    gamma_lower: float
    k: int
    degenerate: bool = False


def rule_of_thumb(g: Graph, c: Clustering, het: Heterogeneity) -> RuleOfThumb:
    """Decide cluster vs Bernoulli and return the minimal phi_bar for cluster.

    Cluster is preferred when psi_bar/(lambda phi_bar^2) <= (1 - b^2) K /
    gamma_lower with gamma_lower = (1/K) sum gamma_k^2, gamma_k = n_k K / n.
    With b = 1 the right-hand side is 0 and Bernoulli wins for every
    phi_bar; that case is returned with a degenerate flag and phi_min = inf.
    """
    b = bias_fraction(g, c, het)
    k = c.k
    gammas = c.sizes.astype(float) * k / c.n
    gamma_lower = float(np.mean(gammas**2))
    if b >= 1.0 - 1e-15:
        return RuleOfThumb("bernoulli", math.inf, math.inf, b, gamma_lower, k, degenerate=True)
    rhs = (1.0 - b * b) * k / gamma_lower
    phi_min = math.sqrt(het.psi_bar / (het.lam * rhs))
    decision = "cluster" if het.psi_bar / (het.lam * het.phi_bar**2) <= rhs else "bernoulli"
    return RuleOfThumb(decision, phi_min, phi_min * math.sqrt(k), b, gamma_lower, k)


@dataclass(frozen=True)
class DesignReport:
    """Scorecard for one (graph, clustering, xi) triple."""

    n: int
    K: int
    bias_frac: float
    worst_case_bias: float
    variance_proxy: float
    objective_sq: float
    objective_abs: float
    xi: float
    xi_threshold: float
    decision: str
    schema: int = field(default=1, repr=False)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "n": self.n,
            "K": self.K,
            "bias_frac": self.bias_frac,
            "worst_case_bias": self.worst_case_bias,
            "variance_proxy": self.variance_proxy,
            "objective_sq": self.objective_sq,
            "objective_abs": self.objective_abs,
            "xi": self.xi,
            "xi_threshold": self.xi_threshold,
            "decision": self.decision,
        }


def build_report(g: Graph, c: Clustering, xi: float, het: Heterogeneity | None = None) -> DesignReport:
    """Evaluate every design metric for one clustering at one xi."""
    het = het or Heterogeneity()
    b = bias_fraction(g, c, het)
    vp = variance_proxy(c)
    thr = (1.0 - b * b) / vp
    if xi < thr:
        decision = "cluster"
    elif xi > thr:
        decision = "bernoulli"
    else:
        decision = "indifferent"
    return DesignReport(
        n=g.n,
        K=c.k,
        bias_frac=b,
        worst_case_bias=het.phi_bar * b,
        variance_proxy=vp,
        objective_sq=xi * vp + b * b,
        objective_abs=xi * vp + b,
        xi=xi,
        xi_threshold=thr,
        decision=decision,
    )


FRONTIER_HEADER = (
    "clustering_id,xi,bias_frac,worst_case_bias,variance_proxy,"
    "objective_sq,objective_abs,xi_threshold,decision"
)


def frontier(
    g: Graph,
    clusterings: Sequence[Clustering] | Sequence[tuple[str, Clustering]],
    xi_grid: Iterable[float],
    het: Heterogeneity | None = None,
) -> list[tuple[str, DesignReport]]:
    """Score every clustering at every xi, in fixed (clustering, xi) order."""
    xi_grid = list(xi_grid)
    clusterings = list(clusterings)
    if not xi_grid or not clusterings:
        raise EmptyGrid("frontier needs a nonempty clustering list and xi grid")
    named: list[tuple[str, Clustering]] = []
    for idx, entry in enumerate(clusterings):
        if isinstance(entry, Clustering):
            named.append((str(idx), entry))
        else:
            named.append((str(entry[0]), entry[1]))
    return [
        (cid, build_report(g, c, xi, het))
        for cid, c in named
        for xi in xi_grid
    ]


def frontier_csv(rows: list[tuple[str, DesignReport]]) -> str:
    lines = [FRONTIER_HEADER]
    for cid, r in rows:
        lines.append(
            f"{cid},{r.xi!r},{r.bias_frac!r},{r.worst_case_bias!r},{r.variance_proxy!r},"
            f"{r.objective_sq!r},{r.objective_abs!r},{r.xi_threshold!r},{r.decision}"
        )
    return "\n".join(lines) + "\n"
