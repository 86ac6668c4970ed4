"""Design-based simulation and exact randomization oracles.

Treatments are assigned Bernoulli(1/2) per cluster; outcomes come from the
linear exogenous / endogenous peer-effect generators or from the extremal
worst-case construction; moments of the difference-in-means estimator are
computed either exactly (enumerating all 2^K cluster assignments) or by
seeded Monte Carlo.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import LengthMismatch, SingularSystem, TooManyClusters
from .graph import Graph
from .metrics import Heterogeneity
from .partition import Clustering

ENUMERATION_CAP = 20  # 2^20 equally weighted assignments

# study presets: calibrated spillover bound and residual-variance grid
CALIBRATED_PHI_BAR = 0.27
NOISE_VARIANCE_GRID = (0.25, 0.5, 1.0)


def _seed_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def assign_treatments(c: Clustering, seed) -> np.ndarray:
    """Bernoulli(1/2) treatment per cluster, broadcast to its members."""
    rng = np.random.default_rng(_seed_tuple(seed))
    cluster_draws = rng.integers(0, 2, size=c.k)
    return cluster_draws[c.assignment].astype(np.int64)


@dataclass(frozen=True)
class OutcomeModel:
    """Linear peer-effect outcome generator.

    ``linear_exogenous``: Y_i = a + beta_d d_i + kappa0 (1-d_i) s_i
    + kappa1 d_i s_i + eps_i + noise, with s_i the treated-neighbor share.
    ``endogenous`` additionally feeds back the neighbor-mean outcome with
    coefficient gamma, solved as an exact linear fixed point.
    """

    kind: str = "linear_exogenous"
    intercept: float = 0.0
    beta_d: float = 0.0
    kappa0: float = 0.0
    kappa1: float = 0.0
    gamma: float = 0.0
    noise_sd: float = 0.0
    fixed_effects: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("linear_exogenous", "endogenous"):
            raise ValueError(f"unknown outcome model kind {self.kind!r}")
        if self.kind == "linear_exogenous" and self.gamma != 0.0:
            raise ValueError("linear_exogenous requires gamma = 0")
        if abs(self.gamma) >= 1.0:
            raise SingularSystem(f"|gamma| = {abs(self.gamma)} >= 1 makes the fixed point singular")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


def treated_neighbor_share(g: Graph, d: np.ndarray) -> np.ndarray:
    """Share of each node's neighbors under treatment; 0 for isolated nodes."""
    counts = np.zeros(g.n)
    for i in range(g.n):
        nbrs = g.neighbors(i)
        if nbrs:
            counts[i] = d[list(nbrs)].sum() / len(nbrs)
    return counts


def _row_normalized_adjacency(g: Graph) -> np.ndarray:
    a = g.adjacency_matrix()
    deg = a.sum(axis=1)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return inv[:, None] * a


def simulate_outcomes(
    g: Graph,
    model: OutcomeModel,
    d: np.ndarray,
    noise_seed=None,
) -> np.ndarray:
    """Realize outcomes for one treatment vector.

    Gaussian noise is drawn only when ``noise_seed`` is given, keeping bare
    calls deterministic. The endogenous fixed point (I - gamma A_tilde) Y =
    exogenous part is solved directly rather than by series truncation.
    """
    d = np.asarray(d)
    if len(d) != g.n:
        raise LengthMismatch(f"treatment vector length {len(d)} != n {g.n}")
    s = treated_neighbor_share(g, d)
    y = (
        model.intercept
        + model.beta_d * d.astype(float)
        + model.kappa0 * (1 - d) * s
        + model.kappa1 * d * s
    )
    if model.fixed_effects is not None:
        y = y + np.asarray(model.fixed_effects, dtype=float)
    if model.noise_sd > 0 and noise_seed is not None:
        rng = np.random.default_rng(_seed_tuple(noise_seed))
        y = y + rng.normal(0.0, model.noise_sd, size=g.n)
    if model.kind == "endogenous" and model.gamma != 0.0:
        if abs(model.gamma) >= 1.0:
            raise SingularSystem("|gamma| >= 1")
        system = np.eye(g.n) - model.gamma * _row_normalized_adjacency(g)
        y = np.linalg.solve(system, y)
    return np.asarray(y, dtype=float)


def estimate(y: np.ndarray, d: np.ndarray) -> float:
    """Difference in means normalized by the 1/2 treatment probability."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d)
    if len(y) != len(d):
        raise LengthMismatch(f"outcome length {len(y)} != treatment length {len(d)}")
    return float(2.0 / len(y) * np.sum((2 * d - 1) * y))


def estimate_adjusted(y: np.ndarray, d: np.ndarray, mu_bar: np.ndarray) -> float:
    """Covariate-adjusted estimator on residualized outcomes y - mu_bar."""
    y = np.asarray(y, dtype=float)
    mu_bar = np.asarray(mu_bar, dtype=float)
    if len(y) != len(mu_bar):
        raise LengthMismatch(f"outcome length {len(y)} != baseline length {len(mu_bar)}")
    return estimate(y - mu_bar, d)


@dataclass(frozen=True)
class WorstCaseOutcome:
    """Extremal potential outcomes that attain the worst-case bias.

    Treated: mu_i(1) + phi alpha_i/|N_i| x (number of untreated neighbors);
    control: mu_i(0) - phi alpha_i/|N_i| x (number of treated neighbors).
    Evaluations at all-ones / all-zeros return the bases exactly. The sign
    flag flips the deviation, giving the opposite extremal model.
    """

    g: Graph
    base_treated: np.ndarray
    base_control: np.ndarray
    phi_bar: float
    alpha: np.ndarray
    sign_flip: bool = False

    def __call__(self, d: np.ndarray) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        g = self.g
        treated_nbrs = np.zeros(g.n)
        for i in range(g.n):
            nbrs = g.neighbors(i)
            if nbrs:
                treated_nbrs[i] = d[list(nbrs)].sum()
        deg = g.degrees.astype(float)
        frac = np.divide(self.alpha, deg, out=np.zeros(g.n), where=deg > 0)
        sign = -1.0 if self.sign_flip else 1.0
        dev_treated = sign * self.phi_bar * frac * (deg - treated_nbrs)
        dev_control = sign * self.phi_bar * frac * treated_nbrs
        return np.where(d == 1, self.base_treated + dev_treated, self.base_control - dev_control)


def worst_case_mu(
    g: Graph,
    het: Heterogeneity | None = None,
    base_treated: np.ndarray | float = 0.0,
    base_control: np.ndarray | float = 0.0,
    sign_flip: bool = False,
) -> WorstCaseOutcome:
    """Build the extremal outcome function for a graph and heterogeneity."""
    g.require_binary("worst_case_mu")
    het = het or Heterogeneity()
    b1 = np.broadcast_to(np.asarray(base_treated, dtype=float), (g.n,)).copy()
    b0 = np.broadcast_to(np.asarray(base_control, dtype=float), (g.n,)).copy()
    return WorstCaseOutcome(g, b1, b0, het.phi_bar, het.alphas(g.n), sign_flip)


def true_tau_of(fn, n: int) -> float:
    """Estimand of an outcome function: mean of fn(1) - fn(0)."""
    return float(np.mean(fn(np.ones(n, dtype=np.int64)) - fn(np.zeros(n, dtype=np.int64))))


def exact_design_moments(g: Graph, c: Clustering, outcome_fn) -> tuple[float, float]:
    """Exact mean and variance of tau_hat over all 2^K cluster assignments."""
    if c.k > ENUMERATION_CAP:
        raise TooManyClusters(f"K={c.k} exceeds the enumeration cap {ENUMERATION_CAP}")
    k = c.k
    n = c.n
    taus = np.empty(2**k)
    for code in range(2**k):
        pattern = (code >> np.arange(k)) & 1
        d = pattern[c.assignment]
        y = np.asarray(outcome_fn(d), dtype=float)
        taus[code] = 2.0 / n * np.sum((2 * d - 1) * y)
    mean = float(np.mean(taus))
    var = float(np.mean((taus - mean) ** 2))
    return mean, var


@dataclass(frozen=True)
class MonteCarloResult:
    mse: float
    se: float
    replications: int
    seed: int
    tau: float
    tau_hats: np.ndarray

    def rows(self) -> list[tuple[int, float, float, float]]:
        """(replication, tau_hat, tau, sq_error) rows in replication order."""
        return [
            (r, float(t), self.tau, float((t - self.tau) ** 2))
            for r, t in enumerate(self.tau_hats)
        ]


def monte_carlo_mse(
    g: Graph,
    c: Clustering,
    model: OutcomeModel,
    true_tau: float | None = None,
    replications: int = 10_000,
    seed: int = 0,
    jobs: int = 1,
) -> MonteCarloResult:
    """Mean squared error of tau_hat over seeded independent replications.

    The estimand is computed analytically (model at all-ones minus
    all-zeros, noise off), never by simulation. Replication r draws its
    treatment and noise streams from (seed, r), so results are identical
    for any job count.
    """
    if replications < 2:
        raise ValueError("need at least 2 replications")
    if true_tau is None:
        quiet = replace(model, noise_sd=0.0)
        ones = np.ones(g.n, dtype=np.int64)
        zeros = np.zeros(g.n, dtype=np.int64)
        true_tau = float(
            np.mean(simulate_outcomes(g, quiet, ones) - simulate_outcomes(g, quiet, zeros))
        )

    def one(r: int) -> float:
        d = assign_treatments(c, (seed, r, 0))
        y = simulate_outcomes(g, model, d, noise_seed=(seed, r, 1))
        return estimate(y, d)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            tau_hats = np.fromiter(pool.map(one, range(replications)), dtype=float)
    else:
        tau_hats = np.fromiter((one(r) for r in range(replications)), dtype=float)

    sq = (tau_hats - true_tau) ** 2
    mse = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / math.sqrt(replications))
    return MonteCarloResult(mse, se, replications, seed, true_tau, tau_hats)
