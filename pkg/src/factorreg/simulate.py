"""Simulation designs with known ground truth and a replication harness.

Regressors and factors follow diagonal VAR(1) recursions with coefficients
drawn from U(0.5, 0.9). Loadings come from the left singular vectors of a
Gaussian matrix: ``r`` factor directions scaled by ``p^{(1-delta1)/2}``,
``s`` strong noise directions scaled by ``p^{(1-delta2)/2}`` and the
remaining noise directions by ``tail_scale``. Design ``"example2"`` keeps
only ``sparsity`` nonzero coefficients per row of ``B``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import ConfigError
from .metrics import distance_dbar, factor_rmse
from .pipeline import PipelineConfig, fit_model
from .regression import RegressionConfig
from .whitenoise import WhiteNoiseConfig

DESIGNS = ("example1", "example2")

# stream tags for independent substreams of one seed
_LOADINGS, _PARAMS, _INNOVATIONS = 0, 1, 2


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for the substream ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *keys])))


def replicate_seed(master_seed: int, index: int) -> int:
    """64-bit seed for replicate ``index`` derived from the master seed."""
    hi, lo = np.random.SeedSequence([master_seed, index]).generate_state(2, np.uint32)
    return int(hi) << 32 | int(lo)


@dataclass
class SimScenario:
    """Data-generating process settings.

    ``loading_seed`` fixes the loading matrices across replicates (set it to
    ``None`` to redraw them from ``seed``); AR coefficients, ``B`` and all
    innovations always come from ``seed``.
    ``m`` defaults to 5 for ``example1`` and 40 for ``example2``.
    """

    p: int
    T: int
    m: int | None = None
    r: int = 3
    s: int = 3
    delta1: float = 0.0
    delta2: float = 0.0
    seed: int = 0
    design: str = "example1"
    sparsity: int = 5
    tail_scale: float = 2.0
    burn_in: int = 200
    loading_seed: int | None = 1234

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ConfigError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.m is None:
            self.m = 5 if self.design == "example1" else 40
        if self.r < 0 or self.s < 0 or self.r + self.s >= self.p:
            raise ConfigError(f"need r + s < p (r={self.r}, s={self.s}, p={self.p})")
        if not 1 <= self.m < self.T:
            raise ConfigError(f"need 1 <= m < T (m={self.m}, T={self.T})")
        for name in ("delta1", "delta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if self.design == "example2" and not 1 <= self.sparsity <= self.m:
            raise ConfigError(f"sparsity must lie in [1, m={self.m}], got {self.sparsity}")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative")


@dataclass
class GroundTruth:
    B: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    f: np.ndarray
    eps: np.ndarray
    z: np.ndarray
    y: np.ndarray
    Phi1: np.ndarray
    Phi2: np.ndarray

    @property
    def eta(self) -> np.ndarray:
        return self.f @ self.L1.T + self.eps @ self.L2.T


def make_loadings(p, r, s, delta1, delta2, tail_scale=2.0, seed=1234):
    """Loading matrices ``(L1, L2)`` with orthogonal columns and set strengths."""
    if r + s >= p:
        raise ConfigError(f"need r + s < p (r={r}, s={s}, p={p})")
    rng = stream(seed, _LOADINGS)
    Q, _, _ = np.linalg.svd(rng.standard_normal((p, p)))
    L1 = Q[:, :r] * p ** ((1.0 - delta1) / 2.0)
    scales = np.r_[np.full(s, p ** ((1.0 - delta2) / 2.0)), np.full(p - r - s, tail_scale)]
    L2 = Q[:, r:] * scales
    return L1, L2


def _signed_uniform(rng, shape):
    return rng.uniform(1.0, 2.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _ar1(rng, phi, n, burn_in):
    d = phi.size
    shocks = rng.standard_normal((n + burn_in, d))
    x = np.zeros(d)
    out = np.empty((n + burn_in, d))
    for t in range(n + burn_in):
        x = phi * x + shocks[t]
        out[t] = x
    return out[burn_in:]


def _simulate(sc: SimScenario, sparse: bool) -> GroundTruth:
    lseed = sc.seed if sc.loading_seed is None else sc.loading_seed
    L1, L2 = make_loadings(sc.p, sc.r, sc.s, sc.delta1, sc.delta2, sc.tail_scale, lseed)
    prng = stream(sc.seed, _PARAMS)
    phi1 = prng.uniform(0.5, 0.9, size=sc.m)
    phi2 = prng.uniform(0.5, 0.9, size=sc.r)
    B = _signed_uniform(prng, (sc.p, sc.m))
    if sparse:
        mask = np.zeros_like(B, dtype=bool)
        for i in range(sc.p):
            mask[i, prng.choice(sc.m, size=sc.sparsity, replace=False)] = True
        B = np.where(mask, B, 0.0)

    rng = stream(sc.seed, _INNOVATIONS)
    z = _ar1(rng, phi1, sc.T, sc.burn_in)
    f = _ar1(rng, phi2, sc.T, sc.burn_in)
    eps = rng.standard_normal((sc.T, sc.p - sc.r))
    y = z @ B.T + f @ L1.T + eps @ L2.T
    return GroundTruth(
        B=B, L1=L1, L2=L2, f=f, eps=eps, z=z, y=y, Phi1=np.diag(phi1), Phi2=np.diag(phi2)
    )


def simulate_example1(sc: SimScenario) -> GroundTruth:
    """Dense-coefficient design."""
    if sc.design != "example1":
        raise ConfigError(f"scenario design is {sc.design!r}, expected 'example1'")
    return _simulate(sc, sparse=False)


def simulate_example2(sc: SimScenario) -> GroundTruth:
    """Sparse-coefficient design with ``sparsity`` nonzeros per row of ``B``."""
    if sc.design != "example2":
        raise ConfigError(f"scenario design is {sc.design!r}, expected 'example2'")
    return _simulate(sc, sparse=True)


def simulate(sc: SimScenario) -> GroundTruth:
    return _simulate(sc, sparse=sc.design == "example2")


def default_pipeline(sc: SimScenario) -> PipelineConfig:
    """OLS for the dense design; BIC-tuned Lasso with support refit for the sparse one."""
    if sc.design == "example2":
        reg = RegressionConfig(mode="lasso", lambda_rule="bic", refit=True)
    else:
        reg = RegressionConfig(mode="ols")
    return PipelineConfig(regression=reg, whitenoise=WhiteNoiseConfig(m_regressors=sc.m))


def score_replicate(sc: SimScenario, cfg: PipelineConfig | None = None) -> dict:
    """Simulate once, fit the pipeline and score it against the truth."""
    truth = simulate(sc)
    fit = fit_model(truth.y, truth.z, cfg or default_pipeline(sc))
    fac = fit.factors
    rec = {
        "seed": sc.seed,
        "rhat": fac.rhat,
        "shat": fac.shat,
        "b_error": float(np.linalg.norm(fit.Bhat - truth.B)),
        "dbar": distance_dbar(fac.A1hat, truth.L1) if fac.rhat > 0 and sc.r > 0 else math.nan,
        "rmse": factor_rmse(fac.A1hat, fac.xhat, truth.L1, truth.f),
    }
    return rec


def _worker(args):
    sc, cfg, index = args
    try:
        return index, score_replicate(sc, cfg), None
    except Exception as err:  # recorded, not fatal
        return index, None, f"{type(err).__name__}: {err}"


@dataclass
class ReplicationReport:
    """Per-replicate records and summary statistics for one scenario."""

    scenario: SimScenario
    n_reps: int
    master_seed: int
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def _values(self, key):
        v = np.array([rec[key] for rec in self.records], dtype=float)
        return v[np.isfinite(v)]

    @property
    def prob_correct(self) -> float:
        """Share of successful replicates with ``rhat == r``."""
        if not self.records:
            return math.nan
        return float(np.mean([rec["rhat"] == self.scenario.r for rec in self.records]))

    def quantiles(self, key) -> tuple[float, float, float]:
        v = self._values(key)
        if v.size == 0:
            return (math.nan,) * 3
        return tuple(float(q) for q in np.percentile(v, [25, 50, 75]))

    def summary(self) -> dict:
        sc = self.scenario
        row = {
            "design": sc.design,
            "delta1": sc.delta1,
            "delta2": sc.delta2,
            "p": sc.p,
            "T": sc.T,
            "m": sc.m,
            "n_reps": self.n_reps,
            "failures": len(self.failures),
            "prob_rhat_eq_r": self.prob_correct,
            "prob_shat_eq_s": float(np.mean([rec["shat"] == sc.s for rec in self.records]))
            if self.records
            else math.nan,
        }
        for key in ("b_error", "dbar", "rmse"):
            q1, med, q3 = self.quantiles(key)
            row[f"{key}_q1"], row[f"{key}_median"], row[f"{key}_q3"] = q1, med, q3
        return row

    def to_json(self) -> str:
        payload = {
            "scenario": asdict(self.scenario),
            "master_seed": self.master_seed,
            "summary": self.summary(),
            "records": self.records,
            "failures": [{"index": i, "error": msg} for i, msg in self.failures],
        }
        return json.dumps(payload, indent=2, allow_nan=True)


def replicate(
    sc: SimScenario,
    n_reps: int,
    cfg: PipelineConfig | None = None,
    jobs: int = 1,
) -> ReplicationReport:
    """Run ``n_reps`` independent replicates of a scenario.

    Replicate ``i`` uses the seed ``replicate_seed(sc.seed, i)``, so results
    do not depend on ``jobs`` or on evaluation order. Failing replicates are
    listed in ``failures`` and excluded from the summaries.
    """
    if n_reps < 1:
        raise ConfigError("n_reps must be at least 1")
    cfg = cfg or default_pipeline(sc)
    tasks = []
    for i in range(n_reps):
        rep = SimScenario(**{**asdict(sc), "seed": replicate_seed(sc.seed, i)})
        tasks.append((rep, cfg, i))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, tasks, chunksize=max(1, n_reps // (4 * jobs))))
    else:
        results = [_worker(t) for t in tasks]
    report = ReplicationReport(scenario=sc, n_reps=n_reps, master_seed=sc.seed)
    for index, rec, err in sorted(results, key=lambda item: item[0]):
        if err is None:
            report.records.append(rec)
        else:
            report.failures.append((index, err))
    return report


TABLE_COLUMNS = ("design", "delta1", "delta2", "p", "T", "n_reps", "failures", "prob_rhat_eq_r")


def probability_table(reports) -> list[dict]:
    """Rows of ``P(rhat = r)``, one per ``(delta pair, p, T)``."""
    rows = [{k: rep.summary()[k] for k in TABLE_COLUMNS} for rep in reports]
    return sorted(rows, key=lambda row: (row["delta1"], row["delta2"], row["p"], row["T"]))
