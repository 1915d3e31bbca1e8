"""Row-wise regression of a response panel on observed regressors.

Each series ``y_i`` is regressed on the common regressor panel ``Z`` either by
ordinary least squares or by a Lasso solved with cyclic coordinate descent,
optionally followed by an OLS refit on the selected support. The residual
panel feeds the factor estimation stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    InsufficientSamplesError,
    SingularGramError,
)

_COND_LIMIT = 1e12


def as_panel(X, name="X", min_rows=2) -> np.ndarray:
    """Validate a T x d panel (rows are time) and return it as a float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"`{name}` must be 2D (T x d), got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise DimensionError(f"`{name}` needs at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"`{name}` contains non-finite entries")
    return X


@dataclass
class RegressionConfig:
    """Settings for the first-stage regression.

    ``lambda_rule`` is one of ``"theory"`` (``lam = c * sqrt(log(p m) / T)``),
    ``"fixed"`` (use ``lam``) or ``"bic"`` (BIC over a log-spaced path of
    ``n_lambdas`` values from each row's ``lambda_max`` down to
    ``lambda_min_ratio * lambda_max``). Penalties act on standardized
    regressors. ``intercept`` only affects OLS; the Lasso always centers.
    """

    mode: str = "ols"
    lambda_rule: str = "theory"
    lam: float | None = None
    c: float = 1.0
    refit: bool = True
    max_iter: int = 10_000
    tol: float = 1e-8
    n_lambdas: int = 50
    lambda_min_ratio: float = 1e-3
    intercept: bool = False

    def __post_init__(self):
        if self.mode not in ("ols", "lasso"):
            raise ConfigError(f"mode must be 'ols' or 'lasso', got {self.mode!r}")
        if self.lambda_rule not in ("theory", "fixed", "bic"):
            raise ConfigError(f"unknown lambda_rule {self.lambda_rule!r}")
        if self.lambda_rule == "fixed" and (self.lam is None or self.lam <= 0):
            raise ConfigError("lambda_rule='fixed' needs lam > 0")
        if self.c <= 0:
            raise ConfigError("c must be positive")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1 or self.n_lambdas < 1:
            raise ConfigError("max_iter and n_lambdas must be >= 1")
        if not 0 < self.lambda_min_ratio < 1:
            raise ConfigError("lambda_min_ratio must lie in (0, 1)")


@dataclass
class RegressionFit:
    """Estimated coefficients with their residual panel.

    ``residuals`` equals ``Y - intercept - Z @ Bhat.T``. ``supports[i]`` holds
    the regressor indices with nonzero coefficient in row ``i``; ``lambdas``
    are the per-row penalties (zeros for OLS).
    """

    Bhat: np.ndarray
    residuals: np.ndarray
    supports: list
    lambdas: np.ndarray
    intercept: np.ndarray
    penalized: np.ndarray | None = field(default=None, repr=False)

    def predict(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return self.intercept + Z @ self.Bhat.T


def _check_pair(Y, Z):
    Y = as_panel(Y, "Y")
    Z = as_panel(Z, "Z")
    if Y.shape[0] != Z.shape[0]:
        raise DimensionError(f"Y has {Y.shape[0]} rows but Z has {Z.shape[0]}")
    return Y, Z


def fit_ols(Y, Z, intercept: bool = False) -> RegressionFit:
    """Component-wise least squares, ``b_i = (Z'Z/T)^{-1} (Z'y_i/T)``."""
    Y, Z = _check_pair(Y, Z)
    T, m = Z.shape
    if T <= m:
        raise InsufficientSamplesError(
            f"OLS needs T > m (T={T}, m={m}); use mode='lasso' instead"
        )
    if intercept:
        zbar, ybar = Z.mean(axis=0), Y.mean(axis=0)
        Zc, Yc = Z - zbar, Y - ybar
    else:
        Zc, Yc = Z, Y
    gram = Zc.T @ Zc / T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond >= _COND_LIMIT:
        raise SingularGramError(f"regressor Gram matrix is singular (condition number {cond:.3e})")
    Bhat = np.linalg.solve(gram, Zc.T @ Yc / T).T
    icpt = ybar - Bhat @ zbar if intercept else np.zeros(Y.shape[1])
    resid = Y - icpt - Z @ Bhat.T
    p = Y.shape[1]
    return RegressionFit(
        Bhat=Bhat,
        residuals=resid,
        supports=[np.arange(m) for _ in range(p)],
        lambdas=np.zeros(p),
        intercept=icpt,
    )


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def lasso_objective(G, C, yy, B, lam):
    """Row-wise Lasso objectives ``(1/T)||y - Xb||^2 + lam ||b||_1`` from moments.

    ``G = X'X/T``, ``C[i] = X'y_i/T`` and ``yy[i] = y_i'y_i/T``.
    """
    quad = np.einsum("ij,jk,ik->i", B, G, B)
    return yy - 2.0 * np.sum(B * C, axis=1) + quad + lam * np.abs(B).sum(axis=1)


def lasso_cd(G, C, lam, B0=None, max_iter=10_000, tol=1e-8, history=None):
    """Cyclic coordinate descent for a batch of Lasso problems sharing ``X``.

    Each row ``i`` of ``C`` defines an independent problem with penalty
    ``lam[i]``. Rows stop updating once a full sweep moves no coordinate by
    more than ``tol``, so every row follows exactly the iterates it would
    follow if solved alone.

    Parameters
    ----------
    G : (m, m) ndarray
        ``X'X / T``.
    C : (p, m) ndarray
        ``X'y_i / T`` stacked by row.
    lam : float or (p,) ndarray
        Penalty levels.
    B0 : (p, m) ndarray, optional
        Warm start.
    history : list, optional
        If given, the objective (without the constant ``y'y/T``) of every row
        is appended after each sweep.

    Returns
    -------
    B : (p, m) ndarray
    n_sweeps : int
    """
    p, m = C.shape
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (p,))
    B = np.zeros((p, m)) if B0 is None else np.array(B0, dtype=float)
    diag = np.diag(G).copy()
    active = np.arange(p)
    half = lam / 2.0
    zeros = np.zeros(p)
    for sweep in range(1, max_iter + 1):
        Ba = B[active]
        Ca = C[active]
        ha = half[active]
        max_step = np.zeros(len(active))
        for j in range(m):
            if diag[j] <= 0.0:
                continue
            old = Ba[:, j].copy()
            rho = Ca[:, j] - Ba @ G[:, j] + old * diag[j]
            new = soft_threshold(rho, ha) / diag[j]
            Ba[:, j] = new
            np.maximum(max_step, np.abs(new - old), out=max_step)
        B[active] = Ba
        if history is not None:
            history.append(lasso_objective(G, C, zeros, B, lam))
        active = active[max_step > tol]
        if active.size == 0:
            return B, sweep
    raise ConvergenceError(
        f"coordinate descent did not converge in {max_iter} sweeps "
        f"({active.size} of {p} rows still moving)",
        last_iterate=B,
    )


def _refit_support(G, c, support):
    """OLS on the columns in ``support`` from moments ``G = X'X/T``, ``c = X'y/T``."""
    coef = np.zeros(G.shape[0])
    if support.size:
        sub = G[np.ix_(support, support)]
        try:
            coef[support] = np.linalg.solve(sub, c[support])
        except np.linalg.LinAlgError:
            coef[support] = np.linalg.lstsq(sub, c[support], rcond=None)[0]
    return coef


def fit_lasso(Y, Z, cfg: RegressionConfig | None = None) -> RegressionFit:
    """Row-wise Lasso, optionally refitting OLS on each selected support.

    Regressors are centered and scaled to unit variance for the penalized
    solve; coefficients are reported on the original scale and the means are
    absorbed into ``intercept``. Constant regressors get zero coefficients.
    """
    cfg = cfg or RegressionConfig(mode="lasso")
    Y, Z = _check_pair(Y, Z)
    T, m = Z.shape
    p = Y.shape[1]

    zbar, ybar = Z.mean(axis=0), Y.mean(axis=0)
    sd = Z.std(axis=0)
    keep = np.flatnonzero(sd > 1e-12 * (1.0 + np.abs(zbar)))
    Xs = (Z[:, keep] - zbar[keep]) / sd[keep]
    Yc = Y - ybar
    G = Xs.T @ Xs / T
    C = Yc.T @ Xs / T
    yy = np.sum(Yc**2, axis=0) / T

    if keep.size == 0:
        Bs = np.zeros((p, 0))
        lambdas = np.zeros(p)
    elif cfg.lambda_rule == "bic":
        Bs, lambdas = _bic_path(T, G, C, yy, cfg)
    else:
        if cfg.lambda_rule == "fixed":
            lam = float(cfg.lam)
        else:
            lam = cfg.c * np.sqrt(np.log(max(p * m, 2)) / T)
        lambdas = np.full(p, lam)
        Bs, _ = lasso_cd(G, C, lambdas, max_iter=cfg.max_iter, tol=cfg.tol)

    penalized = Bs
    if cfg.refit and keep.size:
        Bs = np.vstack(
            [_refit_support(G, C[i], np.flatnonzero(penalized[i])) for i in range(p)]
        )

    def to_original(Bstd):
        out = np.zeros((p, m))
        out[:, keep] = Bstd / sd[keep]
        return out

    Bhat = to_original(Bs)
    icpt = ybar - Bhat @ zbar
    resid = Y - icpt - Z @ Bhat.T
    return RegressionFit(
        Bhat=Bhat,
        residuals=resid,
        supports=[np.flatnonzero(row) for row in Bhat],
        lambdas=np.asarray(lambdas, dtype=float),
        intercept=icpt,
        penalized=to_original(penalized),
    )


def _bic_path(T, G, C, yy, cfg):
    """Pick each row's penalty by BIC along a warm-started path."""
    p = C.shape[0]
    lam_max = np.maximum(2.0 * np.max(np.abs(C), axis=1), 1e-300)
    ratios = np.logspace(0.0, np.log10(cfg.lambda_min_ratio), cfg.n_lambdas)
    best_bic = np.full(p, np.inf)
    best_B = np.zeros_like(C)
    best_lam = lam_max.copy()
    B = np.zeros_like(C)
    last_support = [None] * p
    for ratio in ratios:
        lam = lam_max * ratio
        B, _ = lasso_cd(G, C, lam, B0=B, max_iter=cfg.max_iter, tol=cfg.tol)
        nonzero = B != 0
        for i in range(p):
            if cfg.refit and np.array_equal(nonzero[i], last_support[i]):
                continue  # same refit as at the previous penalty, so no strict improvement
            last_support[i] = nonzero[i]
            support = np.flatnonzero(nonzero[i])
            coef = _refit_support(G, C[i], support) if cfg.refit else B[i]
            mse = yy[i] - 2.0 * C[i] @ coef + coef @ G @ coef
            bic = T * np.log(max(mse, 1e-300)) + support.size * np.log(T)
            if bic < best_bic[i]:
                best_bic[i] = bic
                best_B[i] = B[i]
                best_lam[i] = lam[i]
    return best_B, best_lam


def fit_regression(Y, Z, cfg: RegressionConfig | None = None) -> RegressionFit:
    cfg = cfg or RegressionConfig()
    if cfg.mode == "ols":
        return fit_ols(Y, Z, intercept=cfg.intercept)
    return fit_lasso(Y, Z, cfg)


def residuals(fit: RegressionFit, Y, Z) -> np.ndarray:
    """Residual panel ``Y - intercept - Z Bhat'`` for a fitted regression."""
    Y, Z = _check_pair(Y, Z)
    p, m = fit.Bhat.shape
    if Y.shape[1] != p or Z.shape[1] != m:
        raise DimensionError(
            f"fit expects Y with {p} and Z with {m} columns, got {Y.shape[1]} and {Z.shape[1]}"
        )
    return Y - fit.intercept - Z @ fit.Bhat.T
