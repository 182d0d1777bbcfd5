import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nonlocal_spectra import Coefficient, PeriodicGrid, make_kernel

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def lambda_uniform_cos(mean, amp):
    """lambda_1 for J uniform(1), R = 1, a = mean + amp*cos(pi x).

    J* kills every Fourier mode except the constant one, so -(M + a) is the
    tridiagonal symbol diag(0, 1, 1, ...) - amp/2 * shift; the ansatz
    c_k = q^|k| gives lambda = 1 - sqrt(1 + amp^2) - mean.
    """
    return 1.0 - np.sqrt(1.0 + amp * amp) - mean


@pytest.fixture
def uniform():
    return make_kernel("uniform", halfwidth=1.0)


@pytest.fixture
def tent():
    return make_kernel("tent", halfwidth=1.0, shift=0.3)


@pytest.fixture
def gaussian():
    return make_kernel("truncated-gaussian", stddev=0.5, cutoff=6.0)


@pytest.fixture
def grid():
    return PeriodicGrid(1.0, 256)


@pytest.fixture
def cos_a():
    return Coefficient(0.0, (1.0,))
