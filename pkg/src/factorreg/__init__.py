"""High-dimensional regression with latent dynamic factors and strong noise."""

from .factors import FactorEstimate, fit_factor_model
from .metrics import distance_d, distance_dbar, factor_rmse, forecast_error
from .pipeline import ModelFit, PipelineConfig, fit_model
from .regression import RegressionConfig, RegressionFit, fit_lasso, fit_ols, fit_regression
from .simulate import SimScenario, replicate, simulate
from .whitenoise import WhiteNoiseConfig, select_num_factors

__version__ = "0.1.0"
