import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factorreg.exceptions import DimensionError, RankError
from factorreg.metrics import distance_d, distance_dbar, factor_rmse, forecast_error

from conftest import random_orthonormal


def test_distance_d_identical_spaces():
    H = np.eye(5)[:, :2]
    assert distance_d(H, H) == 0.0


def test_distance_d_orthogonal_spaces():
    assert distance_d(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])) == 1.0


def test_distance_d_matches_double_loop(rng):
    H1 = random_orthonormal(rng, 5, 2)
    H2 = random_orthonormal(rng, 5, 2)
    total = 0.0
    for i in range(2):
        for j in range(2):
            total += (H1[:, i] @ H2[:, j]) ** 2
    expected = np.sqrt(1.0 - total / 2)
    assert distance_d(H1, H2) == pytest.approx(expected, abs=1e-12)


def test_distance_d_shape_mismatch(rng):
    with pytest.raises(DimensionError):
        distance_d(random_orthonormal(rng, 5, 2), random_orthonormal(rng, 5, 3))


def test_distance_d_requires_orthonormal():
    with pytest.raises(ValueError):
        distance_d(np.array([[2.0], [0.0]]), np.array([[1.0], [0.0]]))


def _explicit_projector(H):
    return H @ np.linalg.pinv(H.T @ H) @ H.T


def test_distance_dbar_nested():
    H1 = np.eye(3)[:, :1]
    H2 = np.eye(3)[:, :2]
    P1, P2 = _explicit_projector(H1), _explicit_projector(H2)
    expected = np.sqrt(1 - np.trace(P1 @ P2) / 2)
    assert expected == pytest.approx(np.sqrt(0.5))
    assert distance_dbar(H1, H2) == pytest.approx(expected, abs=1e-12)


def test_distance_dbar_same_nonorthonormal(rng):
    H = rng.standard_normal((6, 3))
    assert distance_dbar(H, H) == pytest.approx(0.0, abs=1e-7)


def test_distance_dbar_orthogonal():
    e = np.eye(3)
    assert distance_dbar(e[:, :1], e[:, 2:]) == 1.0


@pytest.mark.parametrize("r1,r2", [(1, 1), (2, 3), (3, 2), (1, 4)])
def test_distance_dbar_matches_projector_oracle(rng, r1, r2):
    H1 = rng.standard_normal((5, r1))
    H2 = rng.standard_normal((5, r2))
    P1, P2 = _explicit_projector(H1), _explicit_projector(H2)
    expected = np.sqrt(max(0.0, 1 - np.trace(P1 @ P2) / max(r1, r2)))
    assert distance_dbar(H1, H2) == pytest.approx(expected, abs=1e-6)


def test_distance_dbar_rank_deficient():
    H = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(RankError):
        distance_dbar(H, np.eye(3)[:, :2])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.integers(3, 12), data=st.data())
def test_distance_properties(seed, p, data):
    rng = np.random.default_rng(seed)
    r = data.draw(st.integers(1, p - 1))
    H1 = random_orthonormal(rng, p, r)
    H2 = random_orthonormal(rng, p, r)
    d12 = distance_d(H1, H2)
    assert 0.0 <= d12 <= 1.0
    assert d12 == pytest.approx(distance_d(H2, H1), abs=1e-12)
    assert distance_dbar(H1, H2) == pytest.approx(distance_dbar(H2, H1), abs=1e-12)
    assert abs(distance_dbar(H1, H2) - d12) <= 1e-10
    O = random_orthonormal(rng, r, r)
    assert distance_d(H1, H1 @ O) <= 1e-6
    C = rng.standard_normal((r, r)) + 3 * np.eye(r)
    assert distance_dbar(H1, H1 @ C) <= 1e-6


def test_factor_rmse_exact_recovery(rng):
    L1 = rng.standard_normal((4, 2))
    f = rng.standard_normal((10, 2))
    assert factor_rmse(L1, f, L1, f) == 0.0


def test_factor_rmse_hand_value():
    Ahat = np.eye(2)[:, :1]
    xhat = np.zeros((2, 1))
    L1 = np.eye(2)[:, :1]
    f = np.ones((2, 1))
    # each time point misses by 1 in one coordinate: sum = 2, divisor T p = 4
    assert factor_rmse(Ahat, xhat, L1, f) == pytest.approx(np.sqrt(0.5))


def test_factor_rmse_rotation_invariant(rng):
    A = rng.standard_normal((6, 2))
    x = rng.standard_normal((20, 2))
    L1 = rng.standard_normal((6, 3))
    f = rng.standard_normal((20, 3))
    C = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    base = factor_rmse(A, x, L1, f)
    assert factor_rmse(A @ C, x @ np.linalg.inv(C).T, L1, f) == pytest.approx(base, rel=1e-10)


def test_factor_rmse_time_mismatch(rng):
    with pytest.raises(DimensionError):
        factor_rmse(np.eye(3)[:, :1], np.zeros((4, 1)), np.eye(3)[:, :1], np.zeros((5, 1)))


def test_forecast_error_values():
    y = np.arange(8.0).reshape(2, 4)
    assert forecast_error(y, y) == 0.0
    assert forecast_error(np.ones((1, 4)), np.zeros((1, 4))) == pytest.approx(1.0)


def test_forecast_error_shape_mismatch():
    with pytest.raises(DimensionError):
        forecast_error(np.zeros((2, 3)), np.zeros((3, 2)))
