import numpy as np
import pytest

from nonlocal_spectra import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, apply, assemble_dirichlet, assemble_periodic
from nonlocal_spectra.errors import GridMismatch, PeriodMismatch
from nonlocal_spectra.operator import residual


def test_constant_in_kernel_of_M(uniform, grid):
    op = assemble_periodic(uniform, Coefficient.constant(0.3), grid)
    assert np.abs(op.A @ np.ones(grid.N) - 0.3).max() < 1e-14


def test_uniform_kills_cosine(uniform, grid):
    # (1/2) int_{x-1}^{x+1} cos(pi y) dy = 0, so A cos = -cos
    op = assemble_periodic(uniform, Coefficient.constant(0.0), grid)
    u = np.cos(np.pi * grid.x)
    assert np.abs(op.A @ u + u).max() < 1e-10


def test_dirichlet_mass_leak(uniform):
    g = IntervalGrid(0.0, 2.0, 64)
    op = assemble_dirichlet(uniform, Coefficient.constant(0.0), g)
    Au = op.A @ np.ones(g.N)
    assert Au[0] < 0 and Au[-1] < 0
    # oracle: int_Omega J(x - y) dy - 1 at the first node x = -2 + h/2
    x0 = g.x[0]
    leak = 0.5 * (min(x0 + 1, 2.0) - max(x0 - 1, -2.0)) - 1
    assert Au[0] == pytest.approx(leak, abs=g.h)
    assert abs(Au[g.N // 2]) < 1e-14


def test_shift_nonnegative(tent, grid):
    op = assemble_periodic(tent, Coefficient(-2.0, (1.0,)), grid)
    assert op.k_shift == pytest.approx(4.0)
    assert op.B.min() >= 0
    assert op.lam_from_mu(op.mu_from_lam(0.37)) == pytest.approx(0.37)


def test_apply_grid_mismatch(uniform, grid):
    op = assemble_periodic(uniform, Coefficient.constant(0.0), grid)
    other = PeriodicGrid(1.0, 128)
    with pytest.raises(GridMismatch):
        apply(op, GridFunction(other, np.ones(128)))
    assert np.allclose(apply(op, np.ones(grid.N)).values, 0.0, atol=1e-14)


def test_period_mismatch(uniform, grid):
    with pytest.raises(PeriodMismatch):
        assemble_periodic(uniform, Coefficient(0.0, (1.0,), R=2.0), grid)


def test_residual_of_constant_steady_state(uniform, grid):
    u = GridFunction(grid, np.ones(grid.N))
    assert residual(uniform, lambda x, v: v * (1 - v), u) < 1e-14


def test_dirichlet_dominated_by_periodic(gaussian):
    g = PeriodicGrid(1.0, 64)
    P = assemble_periodic(gaussian, Coefficient.constant(0.0), g).W
    sub = IntervalGrid(-g.h / 2, 0.5, 32)
    D = assemble_dirichlet(gaussian, Coefficient.constant(0.0), sub).W
    assert (D - P[16:48, 16:48]).max() <= 1e-15


def test_csv(uniform, tmp_path):
    g = PeriodicGrid(1.0, 8)
    assemble_periodic(uniform, Coefficient.constant(0.0), g).to_csv(tmp_path / "A.csv")
    rows = (tmp_path / "A.csv").read_text().splitlines()
    assert len(rows) == 9 and rows[0].startswith("x,col0")
