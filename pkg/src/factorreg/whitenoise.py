"""Rank-based high-dimensional white-noise test and factor-count selection.

The statistic is the largest ``sqrt(T) |rho|`` over all lag-k Spearman
cross-correlations of a PCA-whitened panel, ``k = 1..N``. Under the null the
K = N d^2 standardized correlations behave like independent normals, so the
maximum is calibrated with ``P(max |Z| <= q) ~= exp(-2 K (1 - Phi(q)))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import (
    CapReachedWarning,
    ConfigError,
    DegenerateColumnWarning,
    DegenerateInputError,
    DimensionError,
    LagError,
)
from .regression import as_panel


@dataclass
class WhiteNoiseConfig:
    """Settings for the sequential white-noise test.

    ``m_regressors`` is the number of regressors removed in the first stage;
    when it is small relative to ``p`` the last ``m`` transformed components
    are excluded from testing. ``i_max`` defaults to ``min(p, 30)``.
    """

    N: int = 10
    alpha: float = 0.05
    epsilon_trim: float = 0.75
    m_regressors: int = 0
    i_max: int | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("N must be a positive integer")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.epsilon_trim < 1:
            raise ConfigError("epsilon_trim must lie in (0, 1)")
        if self.m_regressors < 0:
            raise ConfigError("m_regressors must be non-negative")
        if self.i_max is not None and self.i_max < 1:
            raise ConfigError("i_max must be positive")


@dataclass
class WhiteNoiseDecision:
    statistic: float
    critical_value: float
    reject: bool
    d_i: int
    K_effective: int
    index: int = 1


def pca_orthogonalize(U) -> np.ndarray:
    """Return unit-variance principal component scores of ``U``.

    Components whose covariance eigenvalue is at most ``1e-10`` times the
    largest are dropped, so the output may have fewer columns than ``U``.
    """
    U = as_panel(U, "U", min_rows=3)
    Uc = U - U.mean(axis=0)
    cov = Uc.T @ Uc / (U.shape[0] - 1)
    w, V = np.linalg.eigh(cov)
    w, V = w[::-1], V[:, ::-1]
    if w[0] <= 0.0:
        raise DegenerateInputError("input has zero variance")
    keep = w > 1e-10 * w[0]
    return Uc @ (V[:, keep] / np.sqrt(w[keep]))


def _centered_ranks(X):
    R = stats.rankdata(X, axis=0)
    R -= R.mean(axis=0)
    return R, np.sqrt(np.sum(R**2, axis=0))


def rank_autocorr(U, k: int) -> np.ndarray:
    """Lag-k Spearman cross-correlation matrix.

    Entry ``(j, l)`` correlates component ``j`` at time ``t`` with component
    ``l`` at time ``t - k`` over ``t = k+1..T``; ties get average ranks.
    """
    U = as_panel(U, "U")
    T = U.shape[0]
    if not 1 <= k <= T - 2:
        raise LagError(f"lag k must satisfy 1 <= k <= T-2 = {T - 2}, got {k}")
    lead, lead_norm = _centered_ranks(U[k:])
    lag, lag_norm = _centered_ranks(U[:-k])
    denom = np.outer(lead_norm, lag_norm)
    flat = denom == 0.0
    if np.any(flat):
        warnings.warn(
            "constant column in rank autocorrelation; affected entries set to 0",
            DegenerateColumnWarning,
            stacklevel=2,
        )
        denom = np.where(flat, 1.0, denom)
    return np.where(flat, 0.0, lead.T @ lag / denom)


def _spearman_block(lead, lag):
    """Spearman matrix from (uncentered) average ranks of two windows."""
    a = lead - lead.mean(axis=0)
    b = lag - lag.mean(axis=0)
    na = np.sqrt(np.sum(a**2, axis=0))
    nb = np.sqrt(np.sum(b**2, axis=0))
    denom = np.outer(na, nb)
    flat = denom == 0.0
    return np.where(flat, 0.0, a.T @ b / np.where(flat, 1.0, denom)), bool(flat.any())


def hdwn_statistic(U, N: int) -> tuple[float, int]:
    """Max over lags ``1..N`` and all entries of ``sqrt(T) |rank autocorr|``.

    Returns the statistic and ``K = N d^2``, the number of correlations it
    maximizes over. Window ranks are updated incrementally from the full
    sample ranks instead of re-sorting for every lag; the result equals the
    maximum of :func:`rank_autocorr` over ``k = 1..N``.
    """
    U = as_panel(U, "U")
    T, d = U.shape
    if not 1 <= N <= T - 2:
        raise LagError(f"N must satisfy 1 <= N <= T-2 = {T - 2}, got {N}")
    full = stats.rankdata(U, axis=0)
    lead, lag = full, full
    best, degenerate = 0.0, False
    for k in range(1, N + 1):
        # drop U[k-1] from the leading window and U[T-k] from the lagged one;
        # average ranks fall by 1 per smaller removed value and 1/2 per tie
        gone = U[k - 1]
        lead = lead[1:] - (U[k:] > gone) - 0.5 * (U[k:] == gone)
        gone = U[T - k]
        lag = lag[:-1] - (U[: T - k] > gone) - 0.5 * (U[: T - k] == gone)
        corr, flat = _spearman_block(lead, lag)
        degenerate |= flat
        best = max(best, float(np.max(np.abs(corr))))
    if degenerate:
        warnings.warn(
            "constant column in rank autocorrelation; affected entries set to 0",
            DegenerateColumnWarning,
            stacklevel=2,
        )
    return math.sqrt(T) * best, N * d * d


def gumbel_critical_value(K_effective: int, alpha: float) -> float:
    """Level-``alpha`` critical value for the max of ``K`` absolute normals.

    Solves ``exp(-2 K (1 - Phi(q))) = 1 - alpha`` using the upper-tail
    quantile directly, which stays accurate for very large ``K``.
    """
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if K_effective < 1:
        raise ConfigError("K_effective must be at least 1")
    tail = -math.log1p(-alpha) / (2.0 * K_effective)
    return float(stats.norm.isf(tail))


def white_noise_decision(U, N: int = 10, alpha: float = 0.05, index: int = 1) -> WhiteNoiseDecision:
    """Whiten ``U`` by PCA and test it for serial dependence."""
    W = pca_orthogonalize(U)
    stat, K = hdwn_statistic(W, N)
    cv = gumbel_critical_value(K, alpha)
    return WhiteNoiseDecision(
        statistic=stat,
        critical_value=cv,
        reject=bool(stat > cv),
        d_i=W.shape[1],
        K_effective=K,
        index=index,
    )


def tested_width(p: int, T: int, m: int, epsilon_trim: float) -> int:
    """Number of leading transformed components entering the tests."""
    end = p
    if 0 < m <= 0.1 * p:
        end = p - m
    if p - m >= T:
        end = min(end, int(math.floor(epsilon_trim * T)))
    return end


def select_num_factors(E, Ghat, cfg: WhiteNoiseConfig | None = None):
    """Choose the number of factors by sequential white-noise testing.

    Parameters
    ----------
    E : (T, p) ndarray
        Residual panel.
    Ghat : (p, p) ndarray
        Eigenvectors of the lagged autocovariance matrix, ordered by
        decreasing eigenvalue.
    cfg : WhiteNoiseConfig, optional

    Returns
    -------
    rhat : int
        One less than the first index whose tail subvector is not rejected.
    decisions : list of WhiteNoiseDecision
    """
    cfg = cfg or WhiteNoiseConfig()
    E = as_panel(E, "E")
    T, p = E.shape
    Ghat = np.asarray(Ghat, dtype=float)
    if Ghat.shape != (p, p):
        raise DimensionError(f"Ghat must be {p} x {p}, got {Ghat.shape}")
    u = E @ Ghat
    end = tested_width(p, T, cfg.m_regressors, cfg.epsilon_trim)
    i_max = cfg.i_max if cfg.i_max is not None else min(p, 30)
    decisions = []
    for i in range(1, i_max + 1):
        if end - i + 1 < 2:
            raise DimensionError(
                f"tested dimension fell below 2 at step i={i} (width {end})"
            )
        dec = white_noise_decision(u[:, i - 1 : end], cfg.N, cfg.alpha, index=i)
        decisions.append(dec)
        if not dec.reject:
            return i - 1, decisions
    warnings.warn(
        f"every test up to i_max={i_max} rejected; returning rhat={i_max}",
        CapReachedWarning,
        stacklevel=2,
    )
    return i_max, decisions
