"""
Do the factors help forecast?
=============================

Refit the model at each of the last T0 origins, forecast one step ahead with
and without the latent factors, and compare average errors.
"""

import numpy as np

from factorreg import SimScenario, simulate
from factorreg.forecast import fit_var1, rolling_evaluate

truth = simulate(SimScenario(p=40, T=300, seed=11))

# The regressors follow a diagonal VAR(1); the fitted matrix is close to it.
var = fit_var1(truth.z)
print("true AR coefficients:  ", np.round(np.diag(truth.Phi1), 3))
print("fitted diagonal:       ", np.round(np.diag(var.Phi), 3))
print(f"largest off-diagonal:   {np.max(np.abs(var.Phi - np.diag(np.diag(var.Phi)))):.3f}")

res = rolling_evaluate(truth.y, truth.z, T0=24)
print(f"forecast error with factors:    {res.fe_with_factors:.4f}")
print(f"forecast error regression only: {res.fe_regression_only:.4f}")
print("factors chosen at each origin:", res.rhat)
