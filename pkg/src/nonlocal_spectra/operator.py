"""Matrices of M + a(x) on periodic and Dirichlet grids.

Both assemblies share one lattice normalisation: the convolution weights
are h*J((i-j)h) divided by the lattice mass h*sum_m J(mh). Interior
Dirichlet rows therefore match periodic rows exactly, and mass leaks only
through the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GridMismatch, InputError
from .field import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, check_period, write_columns
from .kernel import Kernel, lattice_mass, periodize


@lru_cache(maxsize=32)
def convolution_matrix(J: Kernel, grid: PeriodicGrid, tail_tol: float = 1e-14) -> np.ndarray:
    """h * periodized kernel: the discrete J* on the torus (rows sum to 1)."""
    W = periodize(J, grid, tail_tol).operator
    W.setflags(write=False)
    return W


@lru_cache(maxsize=32)
def dirichlet_convolution_matrix(J: Kernel, grid: IntervalGrid) -> np.ndarray:
    n = np.arange(grid.N)
    offsets = (n[:, None] - n[None, :]) * grid.h
    W = grid.h * J(offsets) / lattice_mass(J, grid.h)
    W.setflags(write=False)
    return W


@dataclass(frozen=True, eq=False)
class _Operator:
    grid: PeriodicGrid | IntervalGrid
    kernel: Kernel
    a: Coefficient
    W: np.ndarray
    a_values: np.ndarray
    k_shift: float

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def A(self) -> np.ndarray:
        """Matrix of M + a(x)."""
        return self.W - np.eye(self.N) + np.diag(self.a_values)

    @property
    def b_values(self) -> np.ndarray:
        return self.a_values + self.k_shift

    @property
    def B(self) -> np.ndarray:
        """Nonnegative matrix of the shifted operator L + b, b = a + k_shift."""
        return self.W + np.diag(self.b_values)

    def lam_from_mu(self, mu: float) -> float:
        return -mu + 1.0 + self.k_shift

    def mu_from_lam(self, lam: float) -> float:
        return -lam + 1.0 + self.k_shift

    def apply(self, u) -> GridFunction:
        return apply(self, u)

    def to_csv(self, path):
        cols = [self.grid.x] + [self.A[:, j] for j in range(self.N)]
        write_columns(path, ["x"] + [f"col{j}" for j in range(self.N)], cols)


class PeriodicOperator(_Operator):
    """M + a on a PeriodicGrid; W is the periodized, row-normalised convolution."""


class DirichletOperator(_Operator):
    """M + a on an IntervalGrid with the function extended by zero outside."""


def _shift_for(a_values) -> float:
    return max(0.0, 1.0 - float(np.min(a_values)))


def assemble_periodic(J: Kernel, a: Coefficient, grid: PeriodicGrid, tail_tol: float = 1e-14) -> PeriodicOperator:
    check_period(a, grid)
    W = convolution_matrix(J, grid, tail_tol)
    av = a(grid.x)
    return PeriodicOperator(grid, J, a, W, av, _shift_for(av))


def assemble_dirichlet(J: Kernel, a: Coefficient, grid: IntervalGrid) -> DirichletOperator:
    W = dirichlet_convolution_matrix(J, grid)
    av = a(grid.x)
    return DirichletOperator(grid, J, a, W, av, _shift_for(av))


def apply(op: _Operator, u) -> GridFunction:
    """(M + a) u on the operator's grid."""
    if isinstance(u, GridFunction):
        if u.grid != op.grid:
            raise GridMismatch("grid function and operator live on different grids")
        values = u.values
    else:
        values = np.asarray(u, dtype=float)
        if values.shape != (op.N,):
            raise GridMismatch(f"expected {op.N} values, got shape {values.shape}")
    return GridFunction(op.grid, op.W @ values - values + op.a_values * values)


def steady_defect(J: Kernel, f, u: GridFunction, tail_tol: float = 1e-14) -> np.ndarray:
    """Pointwise M[u] + f(x, u) on a periodic grid."""
    if not isinstance(u.grid, PeriodicGrid):
        raise InputError("steady defect is defined on periodic grids")
    W = convolution_matrix(J, u.grid, tail_tol)
    return W @ u.values - u.values + f(u.grid.x, u.values)


def residual(J: Kernel, f, u: GridFunction, tail_tol: float = 1e-14) -> float:
    """Sup-norm of M[u] + f(x, u)."""
    return float(np.max(np.abs(steady_defect(J, f, u, tail_tol))))
