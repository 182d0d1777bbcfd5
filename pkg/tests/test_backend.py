"""The compiled core and the numpy fallback must agree."""
import numpy as np
import pytest

from nonlocal_spectra import _backend, _pycore

pytestmark = pytest.mark.skipif(_backend.NAME != "cython", reason="compiled core not built")


def _core():
    from nonlocal_spectra import _core
    return _core


def test_direct_convolve():
    rng = np.random.default_rng(0)
    f, g = rng.random(300), rng.random(200)
    assert np.abs(_core().direct_convolve(f, g, 0.01) - _pycore.direct_convolve(f, g, 0.01)).max() < 1e-14


@pytest.mark.parametrize("periodic", [True, False])
@pytest.mark.parametrize("w, theta", [(1, 0.0), (3, 0.25), (7, 0.9)])
def test_window_average(periodic, w, theta):
    u = np.random.default_rng(1).random(64)
    a = _core().window_average(u, w, theta, periodic)
    b = _pycore.window_average(u, w, theta, periodic)
    assert np.abs(a - b).max() < 1e-15


def test_power_iterate():
    rng = np.random.default_rng(2)
    B = rng.random((50, 50))
    x0 = np.ones(50)
    xa, ma, ra, ia = _core().power_iterate(B, x0, 1.0, 1e-12, 1000)
    xb, mb, rb, ib = _pycore.power_iterate(B, x0, 1.0, 1e-12, 1000)
    assert ia == ib and abs(ma - mb) < 1e-12 and np.abs(xa - xb).max() < 1e-12


@pytest.mark.parametrize("direction, u0", [(1, 0.1), (-1, 2.0)])
def test_kpp_monotone(direction, u0):
    rng = np.random.default_rng(3)
    W = rng.random((40, 40))
    W /= W.sum(axis=1, keepdims=True)
    a = 0.5 + 0.3 * np.cos(np.linspace(0, 2 * np.pi, 40, endpoint=False))
    args = (W, a, np.full(40, u0), 0.25, 1e-11, 5000, direction, 0.0, 1e-12)
    ua, ia, sa, sta, wa = _core().kpp_monotone(*args)
    ub, ib, sb, stb, wb = _pycore.kpp_monotone(*args)
    assert (ia, sta, wa) == (ib, stb, wb)
    assert np.abs(ua - ub).max() < 1e-13 and np.abs(np.asarray(sa) - sb).max() < 1e-13


def test_read_only_inputs():
    W = np.eye(10)
    W.setflags(write=False)
    _core().kpp_monotone(W, np.ones(10), np.full(10, 0.5), 0.5, 1e-10, 100, 1, 0.0, 1e-12)
    _core().power_iterate(W, np.ones(10), 1.0, 1e-10, 10)
