"""Choosing xi and the spillover-magnitude range from baseline data.

Baseline here means pre-treatment: outcomes observed before any assignment,
so regressions below are design heuristics, not causal estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoNeighbors, NonpositivePhi, RankDeficient, TooFewRows
from .graph import Graph


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and residuals with rank/row guards."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, p = x.shape
    if len(y) != n:
        raise TooFewRows(f"X has {n} rows but Y has {len(y)}")
    if n <= p:
        raise TooFewRows(f"need more rows than columns (n={n}, p={p})")
    if np.linalg.matrix_rank(x) < p:
        raise RankDeficient("covariate matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    return coef, y - x @ coef


def residual_variance(x: np.ndarray, y: np.ndarray) -> float:
    """OLS residual variance with the unbiased n - p divisor."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    _, resid = _ols(x, y)
    return float(resid @ resid) / (x.shape[0] - x.shape[1])


def xi_range(sigma2: float, phi_set) -> list[tuple[float, float]]:
    """One xi interval [sigma2/phi^2, 4 sigma2/phi^2] per candidate phi."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    out = []
    for phi in phi_set:
        if phi <= 0:
            raise NonpositivePhi(f"phi must be > 0, got {phi}")
        out.append((sigma2 / phi**2, 4.0 * sigma2 / phi**2))
    return out


def xi_from_psi_phi(psi_bar: float, phi_bar: float, lam: float = 1.0) -> float:
    """The variance multiplier xi = psi_bar / (lambda phi_bar^2)."""
    if phi_bar <= 0:
        raise NonpositivePhi(f"phi_bar must be > 0, got {phi_bar}")
    if psi_bar <= 0:
        raise ValueError("psi_bar must be > 0")
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    return psi_bar / (lam * phi_bar**2)


@dataclass(frozen=True)
class PhiRange:
    """Spillover-magnitude range [gamma^2, beta_bar |gamma|] from baseline data."""

    gamma_hat: float
    low: float
    high: float
    degenerate: bool


def phi_range_from_gamma(gamma_hat: float, beta_bar: float = 1.0) -> PhiRange:
    """Map an endogenous-coefficient estimate to the phi_bar interval."""
    low, high = gamma_hat**2, beta_bar * abs(gamma_hat)
    return PhiRange(gamma_hat, low, high, degenerate=(gamma_hat == 0.0 or low > high))


def phi_range_from_endogenous(
    g: Graph,
    y_baseline: np.ndarray,
    x: np.ndarray | None = None,
    beta_bar: float = 1.0,
) -> PhiRange:
    """Regress baseline outcomes on the neighbor-mean outcome and covariates.

    gamma_hat is the coefficient on the neighbor mean; isolated nodes are
    dropped from the regression. beta_bar caps the direct effect (1 for
    binary outcomes). A zero gamma_hat yields the flagged [0, 0] interval.
    """
    g.require_binary("phi_range_from_endogenous")
    y = np.asarray(y_baseline, dtype=float)
    if len(y) != g.n:
        raise TooFewRows(f"baseline outcomes length {len(y)} != n {g.n}")
    deg = g.degrees
    keep = deg > 0
    if not keep.any():
        raise NoNeighbors("every node is isolated; neighbor-mean regressor undefined")
    nbr_mean = np.zeros(g.n)
    for i in range(g.n):
        nbrs = g.neighbors(i)
        if nbrs:
            nbr_mean[i] = y[list(nbrs)].mean()
    if x is None:
        design = np.ones((g.n, 1))
    else:
        design = np.asarray(x, dtype=float)
        if design.ndim == 1:
            design = design[:, None]
    full = np.column_stack([design, nbr_mean])[keep]
    coef, _ = _ols(full, y[keep])
    return phi_range_from_gamma(float(coef[-1]), beta_bar)
