"""VAR(1)-based forecasts and rolling-origin evaluation.

The h-step forecast is ``yhat = intercept + B zhat + A1 xhat`` where ``zhat``
and ``xhat`` iterate VAR(1) fits of the regressors and of the recovered
factors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConfigError,
    DimensionError,
    InsufficientSamplesError,
    NonStationaryWarning,
    NumericalOverflowError,
    SingularGramError,
)
from .factors import FactorEstimate
from .metrics import forecast_error
from .pipeline import PipelineConfig, fit_model
from .regression import RegressionConfig, RegressionFit, as_panel, fit_lasso

_COND_LIMIT = 1e12
MIN_TRAIN = 20


@dataclass
class VarFit:
    """``x_t = intercept + Phi x_{t-1} + noise``."""

    Phi: np.ndarray
    intercept: np.ndarray
    mode: str = "dense"
    order: int = 1

    @property
    def spectral_radius(self) -> float:
        if self.Phi.size == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.Phi))))

    def forecast(self, x_last, h: int) -> np.ndarray:
        """Iterate the recursion ``h`` steps from ``x_last``; returns ``(h, d)``."""
        if h < 1:
            raise ValueError("h must be at least 1")
        x = np.asarray(x_last, dtype=float).reshape(-1)
        if x.size != self.intercept.size:
            raise DimensionError(f"x_last has {x.size} entries, VAR has {self.intercept.size}")
        out = np.empty((h, x.size))
        for step in range(h):
            x = self.intercept + self.Phi @ x
            out[step] = x
        return out


def choose_var_mode(T: int, d: int) -> str:
    """Sparse fits once the dimension exceeds a quarter of the sample."""
    return "sparse" if d > T / 4 else "dense"


def fit_var1(X, mode: str = "dense", lam: float | None = None) -> VarFit:
    """Fit a VAR(1) with intercept by least squares or row-wise Lasso.

    ``mode="sparse"`` uses :func:`factorreg.regression.fit_lasso` with a fixed
    penalty ``lam`` when given and the default rate-based penalty otherwise.
    """
    X = as_panel(X, "X")
    T, d = X.shape
    if mode == "dense":
        if T < d + 2:
            raise InsufficientSamplesError(f"dense VAR(1) needs T >= d + 2 (T={T}, d={d})")
        D = np.column_stack([np.ones(T - 1), X[:-1]])
        cond = np.linalg.cond(D.T @ D)
        if not np.isfinite(cond) or cond >= _COND_LIMIT:
            raise SingularGramError(
                f"VAR design is singular (condition number {cond:.3e}); use mode='sparse'"
            )
        coef = np.linalg.lstsq(D, X[1:], rcond=None)[0]
        fit = VarFit(Phi=coef[1:].T, intercept=coef[0], mode="dense")
    elif mode == "sparse":
        if lam is None:
            cfg = RegressionConfig(mode="lasso", refit=False)
        else:
            cfg = RegressionConfig(mode="lasso", lambda_rule="fixed", lam=lam, refit=False)
        reg = fit_lasso(X[1:], X[:-1], cfg)
        fit = VarFit(Phi=reg.Bhat, intercept=reg.intercept, mode="sparse")
    else:
        raise ConfigError(f"mode must be 'dense' or 'sparse', got {mode!r}")
    rho = fit.spectral_radius
    if rho >= 1.0:
        warnings.warn(
            f"fitted VAR(1) is not stationary (spectral radius {rho:.3f})",
            NonStationaryWarning,
            stacklevel=2,
        )
    return fit


@dataclass
class ForecastResult:
    yhat: np.ndarray
    zhat: np.ndarray
    xhat: np.ndarray


def predict(
    fitR: RegressionFit,
    fitF: FactorEstimate,
    varZ: VarFit | None,
    varX: VarFit | None,
    zT,
    xT,
    h: int = 1,
    zhat_override=None,
) -> ForecastResult:
    """Forecast ``h`` steps ahead from the last regressor and factor values.

    ``zhat_override`` of shape ``(h, m)`` replaces the regressor forecasts,
    e.g. when regressors are lagged and already observed.
    """
    if h < 1:
        raise ValueError("h must be at least 1")
    p, m = fitR.Bhat.shape
    r = fitF.rhat
    if zhat_override is not None:
        zhat = np.asarray(zhat_override, dtype=float).reshape(h, m)
    else:
        if varZ is None:
            raise ValueError("varZ is required unless zhat_override is given")
        zhat = varZ.forecast(zT, h)
    if r > 0:
        if varX is None:
            raise ValueError("varX is required when factors are present")
        xhat = varX.forecast(xT, h)
    else:
        xhat = np.zeros((h, 0))
    yhat = fitR.intercept + zhat @ fitR.Bhat.T + xhat @ fitF.A1hat.T
    if not (np.all(np.isfinite(yhat)) and np.all(np.isfinite(zhat)) and np.all(np.isfinite(xhat))):
        raise NumericalOverflowError(f"non-finite forecast within {h} steps")
    return ForecastResult(yhat=yhat, zhat=zhat, xhat=xhat)


@dataclass
class RollingResult:
    fe_with_factors: float
    fe_regression_only: float
    yhat_factors: np.ndarray
    yhat_regression: np.ndarray
    targets: np.ndarray
    rhat: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def n_failures(self) -> int:
        return len(self.failures)


def rolling_evaluate(
    Y,
    Z,
    T0: int,
    cfg: PipelineConfig | None = None,
    z_known: bool = False,
    var_mode: str = "auto",
    var_lam: float | None = None,
) -> RollingResult:
    """One-step rolling-origin forecast comparison.

    For each origin ``tau = T - T0, ..., T - 1`` the pipeline is refit on the
    first ``tau`` rows and row ``tau`` is forecast twice: with the latent
    factors and from the regression part alone. With ``z_known`` the
    regressor values at the target time are taken as observed rather than
    forecast. Failed origins are listed in ``failures`` and left out of both
    error averages.
    """
    Y = as_panel(Y, "Y")
    Z = as_panel(Z, "Z")
    T, p = Y.shape
    if Z.shape[0] != T:
        raise DimensionError(f"Y has {T} rows but Z has {Z.shape[0]}")
    if not 1 <= T0 < T - MIN_TRAIN:
        raise ConfigError(f"T0 must satisfy 1 <= T0 < T - {MIN_TRAIN} = {T - MIN_TRAIN}, got {T0}")
    cfg = cfg or PipelineConfig()
    with_f = np.full((T0, p), np.nan)
    reg_only = np.full((T0, p), np.nan)
    rhats, failures = [], []
    for row, tau in enumerate(range(T - T0, T)):
        try:
            fit = fit_model(Y[:tau], Z[:tau], cfg)
            m = Z.shape[1]
            override = Z[tau][None, :] if z_known else None
            varZ = None
            if not z_known:
                mode = choose_var_mode(tau, m) if var_mode == "auto" else var_mode
                varZ = fit_var1(Z[:tau], mode, var_lam)
            varX = None
            if fit.rhat > 0:
                mode = choose_var_mode(tau, fit.rhat) if var_mode == "auto" else var_mode
                varX = fit_var1(fit.xhat, mode, var_lam)
            res = predict(
                fit.regression,
                fit.factors,
                varZ,
                varX,
                Z[tau - 1],
                fit.xhat[-1] if fit.rhat > 0 else None,
                h=1,
                zhat_override=override,
            )
        except Exception as err:  # recorded per origin
            failures.append((tau, f"{type(err).__name__}: {err}"))
            rhats.append(None)
            continue
        with_f[row] = res.yhat[0]
        reg_only[row] = fit.regression.intercept + res.zhat[0] @ fit.Bhat.T
        rhats.append(fit.rhat)
    targets = Y[T - T0 :]
    ok = np.all(np.isfinite(with_f), axis=1)
    if ok.any():
        fe_f = forecast_error(with_f[ok], targets[ok])
        fe_r = forecast_error(reg_only[ok], targets[ok])
    else:
        fe_f = fe_r = float("nan")
    return RollingResult(
        fe_with_factors=fe_f,
        fe_regression_only=fe_r,
        yhat_factors=with_f,
        yhat_regression=reg_only,
        targets=targets,
        rhat=rhats,
        failures=failures,
    )
