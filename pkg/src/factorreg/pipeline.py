"""Two-stage fit: regression on observed regressors, then factors on residuals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import with_stage
from .factors import FactorEstimate, fit_factor_model
from .regression import RegressionConfig, RegressionFit, as_panel, fit_regression
from .whitenoise import WhiteNoiseConfig

RESIDUAL_FLOOR = 1e-10


@dataclass
class PipelineConfig:
    """Settings for :func:`fit_model`.

    ``r=None`` selects the number of factors automatically. The white-noise
    config's ``m_regressors`` is filled in from ``Z`` when left at 0.
    """

    regression: RegressionConfig = field(default_factory=RegressionConfig)
    whitenoise: WhiteNoiseConfig = field(default_factory=WhiteNoiseConfig)
    k0: int = 2
    r: int | None = None
    d_u: int | None = None


@dataclass
class ModelFit:
    regression: RegressionFit
    factors: FactorEstimate

    @property
    def Bhat(self):
        return self.regression.Bhat

    @property
    def A1hat(self):
        return self.factors.A1hat

    @property
    def xhat(self):
        return self.factors.xhat

    @property
    def rhat(self):
        return self.factors.rhat

    def fitted(self, Z) -> np.ndarray:
        """In-sample fit ``intercept + B z_t + A1 x_t``."""
        return self.regression.predict(Z) + self.factors.common_component


def fit_model(Y, Z, cfg: PipelineConfig | None = None) -> ModelFit:
    """Fit the regression with latent dynamic factors in the error term."""
    cfg = cfg or PipelineConfig()
    Y = as_panel(Y, "Y")
    Z = as_panel(Z, "Z")
    try:
        reg = fit_regression(Y, Z, cfg.regression)
    except Exception as err:
        raise with_stage(err, "regression")
    wn = cfg.whitenoise
    if wn.m_regressors == 0:
        wn = WhiteNoiseConfig(
            N=wn.N,
            alpha=wn.alpha,
            epsilon_trim=wn.epsilon_trim,
            m_regressors=Z.shape[1],
            i_max=wn.i_max,
        )
    r = cfg.r
    if r is None and np.linalg.norm(reg.residuals) <= RESIDUAL_FLOOR * np.linalg.norm(Y):
        r = 0  # exact fit: rank tests would only see rounding noise
    fac = fit_factor_model(reg.residuals, k0=cfg.k0, r=r, d_u=cfg.d_u, wn_cfg=wn)
    return ModelFit(regression=reg, factors=fac)
