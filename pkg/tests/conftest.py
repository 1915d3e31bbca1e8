import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_orthonormal(rng, p, k):
    Q, _ = np.linalg.qr(rng.standard_normal((p, k)))
    return Q
