"""Command-line entry point: ``factorreg simulate | fit | forecast | replicate``.

Settings come from defaults, then an optional JSON ``--config`` file, then
command-line flags (flags win). Unknown configuration keys are rejected
before any computation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DimensionError
from .forecast import rolling_evaluate
from .io import FLOAT_FMT, read_json, read_panel, write_json, write_panel
from .metrics import distance_dbar
from .pipeline import PipelineConfig, fit_model
from .regression import RegressionConfig
from .simulate import SimScenario, default_pipeline, probability_table, replicate, simulate
from .whitenoise import WhiteNoiseConfig

FORECAST_KEYS = {"T0": 24, "z_known": False, "var_mode": "auto", "var_lam": None}
GRID_KEYS = {
    "design": "example1",
    "deltas": [[0.0, 0.0]],
    "p": [50],
    "T": [300],
    "n_reps": 100,
}
SECTIONS = {
    "scenario": {f.name for f in fields(SimScenario)} - {"seed"},
    "regression": {f.name for f in fields(RegressionConfig)},
    "whitenoise": {f.name for f in fields(WhiteNoiseConfig)},
    "forecast": set(FORECAST_KEYS),
    "grid": set(GRID_KEYS),
}
TOP_KEYS = {"seed", "jobs", "header", "r", "k0", "alpha", "N", "out_dir", "y", "z", "truth"}


def validate_config(raw: dict) -> dict:
    """Check a config mapping for unknown keys and return a normalized copy."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - TOP_KEYS - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = {k: v for k, v in raw.items() if k in TOP_KEYS}
    for name, allowed in SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
        cfg[name] = dict(section)
    return cfg


def _merge(args) -> dict:
    cfg = validate_config(read_json(args.config) if args.config else {})
    for key in TOP_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for section, keys in (
        ("scenario", ("p", "T", "design", "delta1", "delta2")),
        ("regression", ("mode",)),
        ("forecast", ("T0", "z_known")),
        ("grid", ("n_reps", "design", "p", "T", "deltas")),
    ):
        for key in keys:
            value = getattr(args, f"{section}_{key}", None)
            if value is not None:
                cfg[section][key] = value
    cfg.setdefault("seed", 0)
    cfg.setdefault("jobs", 1)
    cfg.setdefault("header", False)
    cfg.setdefault("k0", 2)
    cfg.setdefault("out_dir", ".")
    return cfg


def _pipeline(cfg: dict, m: int, base: PipelineConfig | None = None) -> PipelineConfig:
    base = base or PipelineConfig()
    reg = RegressionConfig(**cfg["regression"]) if cfg["regression"] else base.regression
    wn = {**asdict(base.whitenoise), "m_regressors": m, **cfg["whitenoise"]}
    for key in ("alpha", "N"):
        if cfg.get(key) is not None:
            wn[key] = cfg[key]
    return PipelineConfig(regression=reg, whitenoise=WhiteNoiseConfig(**wn), k0=cfg["k0"], r=cfg.get("r"))


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(cfg: dict) -> SimScenario:
    sc = dict(cfg["scenario"])
    if "design" in sc:
        sc["design"] = str(sc["design"]).lower()
    sc.setdefault("p", 50)
    sc.setdefault("T", 300)
    if cfg.get("r") is not None:
        sc["r"] = cfg["r"]  # for simulate, --r sets the true number of factors
    return SimScenario(seed=cfg["seed"], **sc)


def _load_yz(cfg: dict):
    for key in ("y", "z"):
        if not cfg.get(key):
            raise ConfigError(f"missing input path for {key!r} (use --{key} or the config)")
    Y, _ = read_panel(cfg["y"], cfg["header"])
    Z, _ = read_panel(cfg["z"], cfg["header"])
    if Y.shape[0] != Z.shape[0]:
        raise DimensionError(f"y has {Y.shape[0]} rows but z has {Z.shape[0]}")
    return Y, Z


def cmd_simulate(cfg: dict) -> None:
    sc = _scenario(cfg)
    g = simulate(sc)
    out = _out_dir(cfg)
    prefix = cfg["header"]
    write_panel(out / "y.csv", g.y, "y" if prefix else None)
    write_panel(out / "z.csv", g.z, "z" if prefix else None)
    write_json(
        out / "truth.json",
        {
            "scenario": asdict(sc),
            "seed": sc.seed,
            "B": g.B,
            "L1": g.L1,
            "Phi1": np.diag(g.Phi1),
            "Phi2": np.diag(g.Phi2),
        },
    )


def _score(fit, truth: dict) -> dict:
    B = np.asarray(truth["B"], dtype=float)
    L1 = np.asarray(truth["L1"], dtype=float)
    if B.shape != fit.Bhat.shape:
        raise DimensionError(f"truth B has shape {B.shape}, fit has {fit.Bhat.shape}")
    r = L1.shape[1]
    return {
        "r": r,
        "rhat_correct": fit.rhat == r,
        "b_error": float(np.linalg.norm(fit.Bhat - B)),
        "dbar": distance_dbar(fit.A1hat, L1) if fit.rhat > 0 and r > 0 else None,
    }


def cmd_fit(cfg: dict) -> None:
    Y, Z = _load_yz(cfg)
    pipe = _pipeline(cfg, Z.shape[1])
    fit = fit_model(Y, Z, pipe)
    fac = fit.factors
    out = _out_dir(cfg)
    payload = {
        "T": Y.shape[0],
        "p": Y.shape[1],
        "m": Z.shape[1],
        "rhat": fac.rhat,
        "shat": fac.shat,
        "k0": fac.k0,
        "r_forced": pipe.r is not None,
        "M_eigenvalues": fac.M_eigs,
        "S_eigenvalues": fac.S_eigs,
        "decisions": [asdict(d) for d in fac.decisions],
        "lambdas": fit.regression.lambdas,
        "intercept": fit.regression.intercept,
        "config": {
            "regression": asdict(pipe.regression),
            "whitenoise": asdict(pipe.whitenoise),
            "k0": pipe.k0,
            "r": pipe.r,
        },
    }
    if cfg.get("truth"):
        payload["score"] = _score(fit, read_json(cfg["truth"]))
    write_json(out / "fit.json", payload)
    header = cfg["header"]
    write_panel(out / "Bhat.csv", fit.Bhat, "z" if header else None)
    write_panel(out / "A1hat.csv", fit.A1hat, "a" if header else None)
    write_panel(out / "xhat.csv", fit.xhat, "x" if header else None)
    write_panel(out / "residuals.csv", fit.regression.residuals, "e" if header else None)


def cmd_forecast(cfg: dict) -> None:
    Y, Z = _load_yz(cfg)
    fc = {**FORECAST_KEYS, **cfg["forecast"]}
    res = rolling_evaluate(
        Y,
        Z,
        int(fc["T0"]),
        cfg=_pipeline(cfg, Z.shape[1]),
        z_known=bool(fc["z_known"]),
        var_mode=fc["var_mode"],
        var_lam=fc["var_lam"],
    )
    out = _out_dir(cfg)
    T = Y.shape[0]
    p = Y.shape[1]
    table = np.column_stack([res.yhat_factors, res.yhat_regression])
    if cfg["header"]:
        names = [f"f{j + 1}" for j in range(p)] + [f"b{j + 1}" for j in range(p)]
        np.savetxt(out / "forecasts.csv", table, fmt=FLOAT_FMT, delimiter=",", header=",".join(names), comments="")
    else:
        write_panel(out / "forecasts.csv", table)
    write_json(
        out / "fe.json",
        {
            "T0": int(fc["T0"]),
            "origins": list(range(T - int(fc["T0"]), T)),
            "fe_with_factors": res.fe_with_factors,
            "fe_regression_only": res.fe_regression_only,
            "rhat": res.rhat,
            "n_failures": res.n_failures,
            "failures": [{"origin": t, "error": msg} for t, msg in res.failures],
        },
    )


def cmd_replicate(cfg: dict) -> None:
    grid = {**GRID_KEYS, **cfg["grid"]}
    design = str(grid["design"]).lower()
    base = {k: v for k, v in cfg["scenario"].items() if k not in ("p", "T", "delta1", "delta2", "design")}
    reports = []
    for d1, d2 in grid["deltas"]:
        for p in grid["p"]:
            for T in grid["T"]:
                sc = SimScenario(
                    p=int(p), T=int(T), delta1=float(d1), delta2=float(d2),
                    design=design, seed=cfg["seed"], **base,
                )
                pipe = _pipeline(cfg, sc.m, default_pipeline(sc))
                reports.append(replicate(sc, int(grid["n_reps"]), pipe, jobs=int(cfg["jobs"])))
    out = _out_dir(cfg)
    rows = probability_table(reports)
    Ts = sorted({row["T"] for row in rows})
    cells = {}
    for row in rows:
        cells.setdefault((row["delta1"], row["delta2"], row["p"]), {})[row["T"]] = row["prob_rhat_eq_r"]
    lines = [",".join(["delta1", "delta2", "p"] + [f"T={T}" for T in Ts])]
    for (d1, d2, p), by_T in cells.items():
        vals = [repr(float(by_T[T])) if T in by_T else "" for T in Ts]
        lines.append(",".join([repr(float(d1)), repr(float(d2)), str(p)] + vals))
    (out / "table.csv").write_text("\n".join(lines) + "\n")
    write_json(
        out / "summary.json",
        {
            "master_seed": cfg["seed"],
            "cells": [rep.summary() for rep in reports],
            "failures": [
                {"p": rep.scenario.p, "T": rep.scenario.T, "index": i, "error": msg}
                for rep in reports
                for i, msg in rep.failures
            ],
        },
    )


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "replicate": cmd_replicate,
}


def _deltas(text: str) -> list[float]:
    try:
        d1, d2 = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'delta1,delta2', got {text!r}") from None
    return [d1, d2]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--jobs", type=int, help="parallel worker processes")
    common.add_argument("--header", action="store_true", default=None, help="CSV files carry one header row")
    common.add_argument("--r", type=int, help="use a known number of factors")
    common.add_argument("--k0", type=int, help="number of autocovariance lags")
    common.add_argument("--alpha", type=float, help="white-noise test level")
    common.add_argument("--N", type=int, help="white-noise test lags")
    common.add_argument("--out-dir", dest="out_dir", help="output directory")

    parser = argparse.ArgumentParser(prog="factorreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", parents=[common], help="write a simulated panel")
    p_sim.add_argument("--p", dest="scenario_p", type=int)
    p_sim.add_argument("--T", dest="scenario_T", type=int)
    p_sim.add_argument("--design", dest="scenario_design", choices=["example1", "example2"])
    p_sim.add_argument("--delta1", dest="scenario_delta1", type=float)
    p_sim.add_argument("--delta2", dest="scenario_delta2", type=float)

    for name, text in (("fit", "fit the two-stage model"), ("forecast", "rolling-origin forecasts")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--y", help="response panel CSV (T x p)")
        sp.add_argument("--z", help="regressor panel CSV (T x m)")
        sp.add_argument("--mode", dest="regression_mode", choices=["ols", "lasso"])
        if name == "fit":
            sp.add_argument("--truth", help="truth.json from simulate, for scoring")
        else:
            sp.add_argument("--T0", dest="forecast_T0", type=int, help="number of forecast origins")
            sp.add_argument("--z-known", dest="forecast_z_known", action="store_true", default=None)

    p_rep = sub.add_parser("replicate", parents=[common], help="Monte Carlo table of P(rhat = r)")
    p_rep.add_argument("--n-reps", dest="grid_n_reps", type=int)
    p_rep.add_argument("--design", dest="grid_design", choices=["example1", "example2"])
    p_rep.add_argument("--p", dest="grid_p", type=int, nargs="+")
    p_rep.add_argument("--T", dest="grid_T", type=int, nargs="+")
    p_rep.add_argument("--deltas", dest="grid_deltas", type=_deltas, nargs="+", metavar="D1,D2")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge(args)
        COMMANDS[args.command](cfg)
    except (ValueError, ArithmeticError, RuntimeError, OSError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
