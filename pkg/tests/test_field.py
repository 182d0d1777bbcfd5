import numpy as np
import pytest

from nonlocal_spectra import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, gamma_star, mollify, quadrature
from nonlocal_spectra.errors import (
    EpsilonBelowResolution,
    GridMismatch,
    InputError,
    NonpositiveComparator,
    PeriodMismatch,
)
from nonlocal_spectra.field import check_period


def test_grid_validation():
    with pytest.raises(InputError):
        PeriodicGrid(1.0, 7)
    with pytest.raises(InputError):
        PeriodicGrid(-1.0, 8)
    with pytest.raises(InputError):
        IntervalGrid(0.0, 0.0, 8)


def test_grid_nodes():
    g = PeriodicGrid(1.0, 8)
    assert g.h == 0.25 and g.x[0] == -1.0 and g.x[-1] == 0.75
    iv = IntervalGrid(0.5, 1.0, 4)
    assert iv.x.tolist() == [-0.25, 0.25, 0.75, 1.25]


def test_quadrature_cos_squared():
    g = PeriodicGrid(1.0, 32)
    assert quadrature(GridFunction(g, np.cos(np.pi * g.x) ** 2)) == pytest.approx(1.0, abs=1e-12)


def test_mollify_cosine():
    g = PeriodicGrid(1.0, 256)
    ue = mollify(GridFunction(g, np.cos(np.pi * g.x)), 0.25)
    factor = np.sin(np.pi / 4) / (np.pi / 4)
    assert factor == pytest.approx(0.9003, abs=1e-4)
    assert np.abs(ue.values - factor * np.cos(np.pi * g.x)).max() < 1e-4


def test_mollify_interval_zero_extension():
    g = IntervalGrid(0.0, 1.0, 20)
    ue = mollify(GridFunction(g, np.ones(20)), 0.2)
    assert ue.values[10] == pytest.approx(1.0)
    assert ue.values[0] < 1.0


def test_mollify_below_resolution():
    g = PeriodicGrid(1.0, 16)
    with pytest.raises(EpsilonBelowResolution):
        mollify(GridFunction(g, np.zeros(16)), 0.05)


def test_gamma_star():
    g = PeriodicGrid(1.0, 8)
    v = GridFunction(g, np.full(8, 2.0))
    u = GridFunction(g, np.linspace(0, 1, 8))
    assert gamma_star(u, v) == 0.5
    with pytest.raises(NonpositiveComparator):
        gamma_star(u, GridFunction(g, np.zeros(8)))


def test_gridfunction_shape():
    with pytest.raises(GridMismatch):
        GridFunction(PeriodicGrid(1.0, 8), np.zeros(7))


def test_coefficient_eval_and_bounds():
    a = Coefficient(0.5, (1.0,), (0.25,), R=2.0)
    x = np.array([0.0, 1.0, 2.0])
    assert a(x) == pytest.approx(0.5 + np.cos(np.pi * x / 2) + 0.25 * np.sin(np.pi * x / 2))
    assert a.sup_bound == 1.75
    assert a.lipschitz == pytest.approx(np.pi / 2 * 1.25)


def test_coefficient_from_samples_roundtrip():
    a = Coefficient(0.3, (0.5, 0.2), (0.1, -0.4), R=1.5)
    x = -1.5 + 3.0 / 16 * np.arange(16)
    b = Coefficient.from_samples(a(x), 1.5)
    xs = np.linspace(-1.5, 1.5, 101)
    assert np.abs(a(xs) - b(xs)).max() < 1e-13


def test_check_period():
    with pytest.raises(PeriodMismatch):
        check_period(Coefficient(1.0, R=2.0), PeriodicGrid(1.0, 8))


def test_csv_roundtrip(tmp_path):
    g = PeriodicGrid(1.0, 8)
    u = GridFunction(g, np.sin(g.x) / 3)
    u.to_csv(tmp_path / "u.csv")
    v = GridFunction.from_csv(g, tmp_path / "u.csv")
    assert np.array_equal(u.values, v.values)
    assert (tmp_path / "u.csv").read_text().splitlines()[0] == "x,value"
