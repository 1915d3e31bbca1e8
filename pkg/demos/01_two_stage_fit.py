"""
Regression with latent dynamic factors in the errors
====================================================

A panel ``y_t`` (p series) is driven by a few observed regressors ``z_t``
and by unobserved factors hidden in the regression errors. The fit runs in
two stages: least squares for the coefficients, then an eigen-analysis of the
residual autocovariances to pull out the factors.
"""

import numpy as np

from factorreg import SimScenario, fit_model, simulate
from factorreg.metrics import distance_dbar, factor_rmse

# Simulate 50 series over 500 periods: 5 regressors, 3 factors and 3
# strong noise directions. Everything latent is kept for scoring.
truth = simulate(SimScenario(p=50, T=500, seed=7))
print("y:", truth.y.shape, " z:", truth.z.shape)

# Fit with default settings: OLS first, then factors with the number chosen
# by a sequential white-noise test.
fit = fit_model(truth.y, truth.z)
print("estimated number of factors:", fit.rhat)
print("estimated number of strong noise directions:", fit.factors.shat)

# The coefficient error is small compared with the size of B itself.
err = np.linalg.norm(fit.Bhat - truth.B)
print(f"||Bhat - B||_F = {err:.3f}  (||B||_F = {np.linalg.norm(truth.B):.1f})")

# Loadings are identified only up to rotation, so compare column spaces.
print(f"loading space distance: {distance_dbar(fit.A1hat, truth.L1):.4f}")
print(f"common component RMSE: {factor_rmse(fit.A1hat, fit.xhat, truth.L1, truth.f):.4f}")

# The in-sample fit adds the common component to the regression part.
resid = truth.y - fit.fitted(truth.z)
print(f"share of variance left unexplained: {resid.var() / truth.y.var():.3f}")
