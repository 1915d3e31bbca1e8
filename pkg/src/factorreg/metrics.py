"""Subspace distances and error metrics for scoring estimates."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, RankError

_ORTHO_TOL = 1e-8
_RANK_TOL = 1e-10


def _as_matrix(H, name):
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if H.ndim != 2:
        raise DimensionError(f"`{name}` must be 2D, got shape {H.shape}")
    return H


def check_orthonormal(H, name="H", tol=_ORTHO_TOL):
    """Raise ``ValueError`` unless the columns of ``H`` are orthonormal."""
    H = _as_matrix(H, name)
    p, k = H.shape
    if not 1 <= k <= p:
        raise DimensionError(f"`{name}` must have 1 <= k <= p columns, got {H.shape}")
    dev = np.max(np.abs(H.T @ H - np.eye(k)))
    if dev > tol:
        raise ValueError(f"`{name}` is not orthonormal (max deviation {dev:.2e})")
    return H


def distance_d(H1, H2) -> float:
    """Distance between the spans of two orthonormal p x r bases.

    Returns ``sqrt(1 - tr(H1 H1' H2 H2') / r)``; 0 for identical spans and 1
    for orthogonal spans.
    """
    H1 = check_orthonormal(H1, "H1")
    H2 = check_orthonormal(H2, "H2")
    if H1.shape != H2.shape:
        raise DimensionError(f"basis shapes differ: {H1.shape} vs {H2.shape}")
    r = H1.shape[1]
    # tr(H1 H1' H2 H2') = ||H1' H2||_F^2
    overlap = np.sum((H1.T @ H2) ** 2)
    return float(np.sqrt(np.clip(1.0 - overlap / r, 0.0, 1.0)))


def _column_space(H, name):
    H = _as_matrix(H, name)
    if H.shape[1] < 1:
        raise DimensionError(f"`{name}` has no columns")
    U, sv, _ = np.linalg.svd(H, full_matrices=False)
    if sv[-1] <= _RANK_TOL * sv[0] or sv[0] == 0.0:
        raise RankError(
            f"`{name}` is rank deficient (singular values {sv[0]:.3e} .. {sv[-1]:.3e})"
        )
    return U


def distance_dbar(H1, H2) -> float:
    """Distance between column spaces of full-rank matrices of any widths.

    With ``P_i`` the orthogonal projector onto ``span(H_i)``, returns
    ``sqrt(1 - tr(P1 P2) / max(r1, r2))``. It is 0 when one span contains
    the other and 1 when the spans are orthogonal.
    """
    U1 = _column_space(H1, "H1")
    U2 = _column_space(H2, "H2")
    if U1.shape[0] != U2.shape[0]:
        raise DimensionError(f"row counts differ: {U1.shape[0]} vs {U2.shape[0]}")
    denom = max(U1.shape[1], U2.shape[1])
    overlap = np.sum((U1.T @ U2) ** 2)
    return float(np.sqrt(np.clip(1.0 - overlap / denom, 0.0, 1.0)))


def factor_rmse(Ahat, xhat, L1, f) -> float:
    """Root mean squared error of the common component ``Ahat x_t`` vs ``L1 f_t``.

    Parameters
    ----------
    Ahat : (p, r_hat) ndarray
        Estimated loadings.
    xhat : (T, r_hat) ndarray
        Recovered factors, one row per time point.
    L1 : (p, r) ndarray
        True loadings.
    f : (T, r) ndarray
        True factors.
    """
    Ahat = _as_matrix(Ahat, "Ahat")
    L1 = _as_matrix(L1, "L1")
    xhat = np.asarray(xhat, dtype=float).reshape(len(xhat), -1)
    f = np.asarray(f, dtype=float).reshape(len(f), -1)
    if xhat.shape[0] != f.shape[0]:
        raise DimensionError(f"time lengths differ: {xhat.shape[0]} vs {f.shape[0]}")
    if Ahat.shape[0] != L1.shape[0]:
        raise DimensionError(f"loading row counts differ: {Ahat.shape[0]} vs {L1.shape[0]}")
    if Ahat.shape[1] != xhat.shape[1] or L1.shape[1] != f.shape[1]:
        raise DimensionError("factor columns do not match their loading matrices")
    T, p = f.shape[0], L1.shape[0]
    diff = xhat @ Ahat.T - f @ L1.T
    return float(np.sqrt(np.sum(diff**2) / (T * p)))


def forecast_error(yhat, y) -> float:
    """Average per-period forecast error ``||yhat_t - y_t||_2 / sqrt(p)``."""
    yhat = np.atleast_2d(np.asarray(yhat, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if yhat.shape != y.shape:
        raise DimensionError(f"shape mismatch: {yhat.shape} vs {y.shape}")
    p = y.shape[1]
    return float(np.mean(np.linalg.norm(yhat - y, axis=1)) / np.sqrt(p))
