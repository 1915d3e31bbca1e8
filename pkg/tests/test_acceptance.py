"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS`` or ``FAIL`` line. The Monte Carlo criteria
are slow (tens of minutes on one core); run them alone with
``pytest tests/test_acceptance.py -v``.
"""

import os
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from factorreg.forecast import rolling_evaluate
from factorreg.simulate import SimScenario, replicate, replicate_seed, simulate

MASTER_SEED = 1
JOBS = int(os.environ.get("FACTORREG_JOBS", os.cpu_count() or 1))
TESTS = Path(__file__).parent

REFERENCE_PROBS = {
    ((0.0, 0.0), 50, 300): 0.956,
    ((0.0, 0.0), 50, 1000): 0.910,
    ((0.0, 0.0), 100, 300): 0.888,
    ((0.0, 0.0), 100, 1000): 0.912,
    ((0.4, 0.5), 50, 300): 0.936,
    ((0.4, 0.5), 50, 1000): 0.916,
    ((0.4, 0.5), 100, 300): 0.934,
    ((0.4, 0.5), 100, 1000): 0.926,
}


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        return ok

    return emit


def _run(design, deltas, p, T, n_reps):
    sc = SimScenario(p=p, T=T, delta1=deltas[0], delta2=deltas[1], design=design, seed=MASTER_SEED)
    return replicate(sc, n_reps, jobs=JOBS)


def test_criterion1_dense_design_probabilities(report):
    cells = []
    ok = True
    for (deltas, p, T), target in REFERENCE_PROBS.items():
        rep = _run("example1", deltas, p, T, 500)
        prob = rep.prob_correct
        hit = abs(prob - target) <= 0.08
        ok &= hit
        cells.append(f"{deltas}/p={p}/T={T}: {prob:.3f} vs {target:.3f}{'' if hit else ' (out)'}")
    assert report("criterion 1 (dense-design probabilities within 0.08)", ok, "; ".join(cells))


def test_criterion2_sparse_design_pattern(report):
    cells = []
    ok = True
    for p in (50, 100, 150, 200):
        for T in (500, 1000, 1500):
            prob = _run("example2", (0.4, 0.5), p, T, 100).prob_correct
            hit = prob >= 0.88
            ok &= hit
            cells.append(f"p={p}/T={T}: {prob:.3f}{'' if hit else ' (low)'}")
    low = _run("example2", (0.0, 0.0), 50, 300, 200).prob_correct
    ok &= low <= 0.30
    cells.append(f"(0,0)/p=50/T=300: {low:.3f} (needs <= 0.30)")
    assert report("criterion 2 (sparse-design pattern)", ok, "; ".join(cells))


def test_criterion3_ols_rate(report):
    Ts = np.array([300, 500, 1000, 1500])
    medians = [_run("example1", (0.0, 0.0), 50, int(T), 100).quantiles("b_error")[1] for T in Ts]
    slope = np.polyfit(np.log(Ts), np.log(medians), 1)[0]
    ok = abs(slope + 0.5) <= 0.1
    detail = f"slope {slope:.3f} (target -0.5 +/- 0.1), medians {np.round(medians, 4).tolist()}"
    assert report("criterion 3 (OLS error rate)", ok, detail)


def test_criterion4_consistency_trends(report):
    Ts = (300, 500, 1000, 1500)
    good = 0
    parts = []
    for p in (50, 100, 150, 200):
        reps = [_run("example1", (0.0, 0.0), p, T, 50) for T in Ts]
        dbar = [rep.quantiles("dbar")[1] for rep in reps]
        rmse = [rep.quantiles("rmse")[1] for rep in reps]
        down = bool(np.all(np.diff(dbar) < 0) and np.all(np.diff(rmse) < 0))
        good += down
        parts.append(f"p={p}: dbar {np.round(dbar, 4).tolist()} rmse {np.round(rmse, 4).tolist()}")
    ok = good >= 3
    assert report("criterion 4 (decreasing medians)", ok, f"{good}/4 p values; " + "; ".join(parts))


def test_criterion5_forecast_ordering(report):
    base = SimScenario(p=50, T=300, seed=MASTER_SEED)
    with_f, reg_only = [], []
    for i in range(50):
        g = simulate(replace(base, seed=replicate_seed(MASTER_SEED, i)))
        res = rolling_evaluate(g.y, g.z, 24)
        with_f.append(res.fe_with_factors)
        reg_only.append(res.fe_regression_only)
    a, b = float(np.mean(with_f)), float(np.mean(reg_only))
    ok = a < b
    detail = f"mean FE with factors {a:.4f} vs regression only {b:.4f}; factors better in {np.mean(np.array(with_f) < reg_only):.0%}"
    assert report("criterion 5 (forecast ordering)", ok, detail)


PROPERTY_TESTS = [
    "test_metrics.py::test_distance_properties",
    "test_metrics.py::test_distance_d_identical_spaces",
    "test_metrics.py::test_distance_d_orthogonal_spaces",
    "test_metrics.py::test_distance_dbar_same_nonorthonormal",
    "test_metrics.py::test_factor_rmse_rotation_invariant",
    "test_regression.py::test_lasso_objective_monotone_and_kkt",
    "test_factors.py::test_pipeline_invariants",
    "test_factors.py::test_build_s_population_identity",
    "test_factors.py::test_eigen_split_reconstruction_and_signs",
    "test_factors.py::test_pipeline_noiseless_exact_recovery",
    "test_whitenoise.py::test_size_on_iid_panels",
    "test_forecast.py::test_predict_reconstruction_and_chaining",
    "test_simulate.py::test_simulate_deterministic",
    "test_simulate.py::test_replicate_order_independent",
]

ORACLE_TESTS = [
    "test_factors.py::test_autocov_matches_double_loop",
    "test_metrics.py::test_distance_dbar_matches_projector_oracle",
    "test_regression.py::test_lasso_matches_convex_oracle",
]


def _pytest(node_ids):
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider"]
    proc = subprocess.run(cmd + [str(TESTS / n) for n in node_ids], capture_output=True, text=True)
    lines = proc.stdout.strip().splitlines()
    return proc.returncode == 0, lines[-1] if lines else proc.stderr.strip()


def test_criterion6_property_suites(report):
    ok, summary = _pytest(PROPERTY_TESTS)
    assert report("criterion 6 (property suites)", ok, summary)


def test_criterion7_oracle_equivalence(report):
    ok, summary = _pytest(ORACLE_TESTS)
    assert report("criterion 7 (tiny-scale oracles)", ok, summary)
