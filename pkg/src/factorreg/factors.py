"""Factor estimation on regression residuals.

Loadings come from the eigenvectors of ``M = sum_k Sigma(k) Sigma(k)'`` over
lags ``1..k0``. Factors are recovered by projected PCA: the covariance is
projected onto the estimated white-noise directions, the strongest noise
directions are discarded, and the factor process is read off along the
remaining directions that best align with the loading space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DegenerateGapWarning,
    DimensionError,
    IllConditionedProjectionError,
    LagError,
    NoSignalError,
    with_stage,
)
from .regression import as_panel
from .whitenoise import WhiteNoiseConfig, select_num_factors

_PROJ_TOL = 1e-10


@dataclass
class AutocovarianceSet:
    k0: int
    Sigma: list
    mean: np.ndarray


@dataclass
class FactorEstimate:
    """Everything produced by one factor-model fit.

    ``A1hat`` spans the estimated loading space and ``xhat`` holds the
    recovered factors (one row per time point). ``U2hat = U2star @ Rhat``
    is the projection used for recovery.
    """

    A1hat: np.ndarray
    U1hat: np.ndarray
    M_eigs: np.ndarray
    shat: int
    S_eigs: np.ndarray
    U2star: np.ndarray
    Rhat: np.ndarray
    U2hat: np.ndarray
    xhat: np.ndarray
    rhat: int
    k0: int = 2
    decisions: list = field(default_factory=list)

    @property
    def common_component(self) -> np.ndarray:
        return self.xhat @ self.A1hat.T


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    V = np.array(V, dtype=float)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def autocovariances(E, k0: int) -> AutocovarianceSet:
    """Lag ``0..k0`` sample autocovariances, all with divisor ``T``."""
    E = as_panel(E, "E")
    T = E.shape[0]
    if not 1 <= k0 <= T - 2:
        raise LagError(f"k0 must satisfy 1 <= k0 <= T-2 = {T - 2}, got {k0}")
    mean = E.mean(axis=0)
    Ec = E - mean
    Sigma = [Ec[k:].T @ Ec[: T - k] / T for k in range(k0 + 1)]
    return AutocovarianceSet(k0=k0, Sigma=Sigma, mean=mean)


def build_m(acv: AutocovarianceSet) -> np.ndarray:
    if acv.k0 < 1:
        raise LagError("k0 must be at least 1")
    M = sum(S @ S.T for S in acv.Sigma[1 : acv.k0 + 1])
    return (M + M.T) / 2.0


def _descending_eigh(M):
    M = np.asarray(M, dtype=float)
    M = (M + M.T) / 2.0
    w, V = np.linalg.eigh(M)
    return w[::-1], fix_signs(V[:, ::-1])


def eigen_split(M, r: int):
    """Split the eigenvectors of symmetric ``M`` into the leading ``r`` and the rest.

    Returns ``(A1hat, U1hat, eigs)`` with eigenvalues in descending order.
    Warns with :class:`DegenerateGapWarning` when eigenvalues ``r`` and
    ``r + 1`` coincide, since the split is then arbitrary.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"M must be square, got shape {M.shape}")
    p = M.shape[0]
    if not 1 <= r < p:
        raise DimensionError(f"r must satisfy 1 <= r < p={p}, got {r}")
    eigs, V = _descending_eigh(M)
    if abs(eigs[r - 1] - eigs[r]) <= 1e-10 * abs(eigs[0]):
        warnings.warn(
            f"eigenvalues {r} and {r + 1} are numerically equal; split is not unique",
            DegenerateGapWarning,
            stacklevel=2,
        )
    return V[:, :r], V[:, r:], eigs


def build_s(acv: AutocovarianceSet, U1hat) -> np.ndarray:
    """Projected covariance ``Sigma0 U1 U1' Sigma0``."""
    U1hat = np.asarray(U1hat, dtype=float)
    Sigma0 = acv.Sigma[0]
    if U1hat.ndim != 2 or U1hat.shape[0] != Sigma0.shape[0]:
        raise DimensionError(f"U1hat must have {Sigma0.shape[0]} rows, got {U1hat.shape}")
    W = Sigma0 @ U1hat
    return W @ W.T


def select_shat(S_eigs, d_u: int) -> int:
    """Number of dominant noise directions by the minimum eigenvalue ratio.

    Picks ``argmin_{1<=j<=d_u} mu_{j+1} / mu_j`` (first index on ties).
    Ratios whose denominator is negligible relative to ``mu_1`` count as 1.
    """
    mu = np.clip(np.asarray(S_eigs, dtype=float), 0.0, None)
    p = mu.size
    if not 1 <= d_u <= p - 1:
        raise DimensionError(f"d_u must satisfy 1 <= d_u <= p-1 = {p - 1}, got {d_u}")
    if not mu[0] > np.finfo(float).tiny:
        raise NoSignalError("all eigenvalues are numerically zero")
    head, nxt = mu[:d_u], mu[1 : d_u + 1]
    ok = head > 1e-12 * mu[0]
    ratios = np.ones(d_u)
    ratios[ok] = nxt[ok] / head[ok]
    return int(np.argmin(ratios)) + 1


def build_u2(S, shat: int, A1hat):
    """Directions for factor recovery.

    ``U2star`` spans the eigenvectors of ``S`` outside its ``shat`` largest
    eigenvalues; ``Rhat`` picks the ``r`` directions within it that align
    best with ``A1hat``. Returns ``(U2star, Rhat, U2hat)``.
    """
    A1hat = np.asarray(A1hat, dtype=float)
    S = np.asarray(S, dtype=float)
    p, r = A1hat.shape
    if S.shape != (p, p):
        raise DimensionError(f"S must be {p} x {p}, got {S.shape}")
    if not 0 <= shat < p or p - shat < r:
        raise DimensionError(f"need 0 <= shat < p and p - shat >= r (shat={shat}, p={p}, r={r})")
    _, V = _descending_eigh(S)
    U2star = V[:, shat:]
    W = U2star.T @ A1hat
    _, R = _descending_eigh(W @ W.T)
    Rhat = R[:, :r]
    U2hat = U2star @ Rhat
    smin = np.linalg.svd(U2hat.T @ A1hat, compute_uv=False).min()
    if smin <= _PROJ_TOL:
        raise IllConditionedProjectionError(
            f"U2hat'A1hat is singular (smallest singular value {smin:.3e})",
            singular_value=smin,
        )
    return U2star, Rhat, U2hat


def recover_factors(E, U2hat, A1hat) -> np.ndarray:
    """Factors ``x_t = (U2hat' A1hat)^{-1} U2hat' e_t`` for every row of ``E``."""
    E = as_panel(E, "E", min_rows=1)
    U2hat = np.asarray(U2hat, dtype=float)
    A1hat = np.asarray(A1hat, dtype=float)
    if U2hat.shape != A1hat.shape or U2hat.shape[0] != E.shape[1]:
        raise DimensionError(
            f"incompatible shapes E {E.shape}, U2hat {U2hat.shape}, A1hat {A1hat.shape}"
        )
    P = U2hat.T @ A1hat
    smin = np.linalg.svd(P, compute_uv=False).min()
    if smin <= _PROJ_TOL:
        raise IllConditionedProjectionError(
            f"U2hat'A1hat is singular (smallest singular value {smin:.3e})",
            singular_value=smin,
        )
    return np.linalg.solve(P, U2hat.T @ E.T).T


def fit_factor_model(
    E,
    k0: int = 2,
    r: int | None = None,
    d_u: int | None = None,
    wn_cfg: WhiteNoiseConfig | None = None,
) -> FactorEstimate:
    """Estimate loadings, factor count and factors from a residual panel.

    Parameters
    ----------
    E : (T, p) ndarray
        Residuals of the first-stage regression.
    k0 : int
        Number of lags summed in ``M``.
    r : int, optional
        Number of factors. ``None`` selects it by sequential white-noise
        testing configured by ``wn_cfg``.
    d_u : int, optional
        Upper search index for the noise-spike count; ``floor(p / 2)`` by
        default.
    """
    E = as_panel(E, "E")
    T, p = E.shape

    def stage(name, fn, *args):
        try:
            return fn(*args)
        except Exception as err:
            raise with_stage(err, name)

    acv = stage("autocovariances", autocovariances, E, k0)
    M = stage("build_m", build_m, acv)
    M_eigs, G = _descending_eigh(M)

    decisions = []
    if r is None:
        r, decisions = stage("select_num_factors", select_num_factors, E, G, wn_cfg)
    elif not 0 <= r < p:
        raise DimensionError(f"r must satisfy 0 <= r < p={p}, got {r}")

    if r == 0:
        return FactorEstimate(
            A1hat=np.zeros((p, 0)),
            U1hat=G,
            M_eigs=M_eigs,
            shat=0,
            S_eigs=np.zeros(0),
            U2star=np.zeros((p, 0)),
            Rhat=np.zeros((0, 0)),
            U2hat=np.zeros((p, 0)),
            xhat=np.zeros((T, 0)),
            rhat=0,
            k0=k0,
            decisions=decisions,
        )

    A1hat, U1hat, _ = stage("eigen_split", eigen_split, M, r)
    S = stage("build_s", build_s, acv, U1hat)
    S_eigs = np.linalg.eigvalsh(S)[::-1]
    du = p // 2 if d_u is None else d_u
    du = max(1, min(du, p - r, p - 1))
    scale = np.linalg.norm(acv.Sigma[0], 2) ** 2
    if S_eigs[0] <= 1e-12 * scale:
        # no variance outside the loading space, so no noise directions to drop
        shat = 0
    else:
        shat = stage("select_shat", select_shat, S_eigs, du)
    U2star, Rhat, U2hat = stage("build_u2", build_u2, S, shat, A1hat)
    xhat = stage("recover_factors", recover_factors, E, U2hat, A1hat)
    return FactorEstimate(
        A1hat=A1hat,
        U1hat=U1hat,
        M_eigs=M_eigs,
        shat=shat,
        S_eigs=S_eigs,
        U2star=U2star,
        Rhat=Rhat,
        U2hat=U2hat,
        xhat=xhat,
        rhat=r,
        k0=k0,
        decisions=decisions,
    )
