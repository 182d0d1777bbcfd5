"""Grids, sampled functions, Fourier coefficients and the small functionals
built on them (quadrature, window mollifier, sliding constant)."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _backend
from .errors import EpsilonBelowResolution, GridMismatch, InputError, NonpositiveComparator


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid of the torus [-R, R): x_i = -R + offset + i*h, h = 2R/N.

    ``offset`` slides the lattice (0 <= offset < h); it lets a periodic
    problem share its nodes with an interval grid.
    """

    R: float
    N: int
    offset: float = 0.0

    def __post_init__(self):
        if not self.R > 0:
            raise InputError(f"half-period R must be positive, got {self.R}")
        if self.N < 8 or self.N % 2:
            raise InputError(f"N must be even and >= 8, got {self.N}")

    @property
    def period(self) -> float:
        return 2.0 * self.R

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.N

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.R + self.offset + self.h * np.arange(self.N)
        x.setflags(write=False)
        return x

    @property
    def measure(self) -> float:
        return 2.0 * self.R


@dataclass(frozen=True)
class IntervalGrid:
    """Midpoint grid of the interval (y - r, y + r); no node sits on the boundary."""

    y: float
    r: float
    N: int

    def __post_init__(self):
        if not self.r > 0:
            raise InputError(f"radius must be positive, got {self.r}")
        if self.N < 2:
            raise InputError(f"N must be >= 2, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * self.r / self.N

    @cached_property
    def x(self) -> np.ndarray:
        x = self.y - self.r + (np.arange(self.N) + 0.5) * self.h
        x.setflags(write=False)
        return x

    @property
    def measure(self) -> float:
        return 2.0 * self.r

    @classmethod
    def with_spacing(cls, y: float, r: float, per_unit: int) -> "IntervalGrid":
        return cls(y, r, int(round(2.0 * r * per_unit)))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: PeriodicGrid | IntervalGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.N,):
            raise GridMismatch(f"expected {self.grid.N} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("grid function has non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def like(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def to_csv(self, path, header=("x", "value")):
        write_columns(path, header, [self.grid.x, self.values])

    @classmethod
    def from_csv(cls, grid, path) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] != grid.N or not np.allclose(data[:, 0], grid.x, atol=1e-12):
            raise GridMismatch(f"{path} does not sample the given grid")
        return cls(grid, data[:, 1])


@dataclass(frozen=True)
class Coefficient:
    """Finite Fourier series a(x) = mean + sum_k cos_k cos(pi k x / R) + sin_k sin(pi k x / R)."""

    mean: float
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()
    R: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(s) for s in self.sin))
        values = (self.mean,) + self.cos + self.sin
        if not all(np.isfinite(values)):
            raise InputError("Fourier coefficients must be finite")
        if not self.R > 0:
            raise InputError(f"coefficient half-period must be positive, got {self.R}")

    @classmethod
    def constant(cls, value: float, R: float = 1.0) -> "Coefficient":
        return cls(value, R=R)

    @classmethod
    def from_samples(cls, values, R: float) -> "Coefficient":
        """Trigonometric interpolant of samples taken at x_i = -R + i*2R/n."""
        v = np.asarray(values, dtype=float)
        n = v.size
        V = np.fft.rfft(v)
        K = (n - 1) // 2
        k = np.arange(1, K + 1)
        sign = (-1.0) ** k
        cos = sign * 2.0 * V[1:K + 1].real / n
        sin = sign * -2.0 * V[1:K + 1].imag / n
        if n % 2 == 0:
            cos = np.append(cos, (-1.0) ** (n // 2) * V[n // 2].real / n)
            sin = np.append(sin, 0.0)
        return cls(V[0].real / n, tuple(cos), tuple(sin), R)

    @property
    def modes(self) -> int:
        return max(len(self.cos), len(self.sin))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.mean)
        w = np.pi * x / self.R
        for k, c in enumerate(self.cos, start=1):
            out += c * np.cos(k * w)
        for k, s in enumerate(self.sin, start=1):
            out += s * np.sin(k * w)
        return out

    @property
    def lipschitz(self) -> float:
        total = 0.0
        for k in range(1, self.modes + 1):
            c = self.cos[k - 1] if k <= len(self.cos) else 0.0
            s = self.sin[k - 1] if k <= len(self.sin) else 0.0
            total += np.pi * k / self.R * (abs(c) + abs(s))
        return total

    @property
    def sup_bound(self) -> float:
        return abs(self.mean) + sum(map(abs, self.cos)) + sum(map(abs, self.sin))

    def shifted(self, c: float) -> "Coefficient":
        return Coefficient(self.mean + c, self.cos, self.sin, self.R)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "cos": list(self.cos), "sin": list(self.sin)}


def check_period(a: Coefficient, grid: PeriodicGrid):
    from .errors import PeriodMismatch

    if not np.isclose(a.R, grid.R, rtol=0, atol=1e-12 * max(1.0, grid.R)):
        raise PeriodMismatch(f"coefficient period 2*{a.R} != grid period 2*{grid.R}")


def quadrature(u: GridFunction) -> float:
    """h * sum(values): the uniform rule, spectrally accurate on periodic grids."""
    return float(u.grid.h * np.sum(u.values))


def mollify(u: GridFunction, eps: float) -> GridFunction:
    """Sliding average (1/2eps) * integral of u over [x - eps, x + eps].

    The integrand is the piecewise-linear interpolant of the samples; on a
    periodic grid it wraps, on an interval grid it is extended by zero.
    """
    h = u.grid.h
    if eps < h * (1 - 1e-12):
        raise EpsilonBelowResolution(f"eps={eps} is below the grid spacing h={h}")
    ratio = eps / h
    w = int(np.floor(ratio + 1e-12))
    theta = max(ratio - w, 0.0)
    if theta < 1e-12:
        theta = 0.0
    periodic = isinstance(u.grid, PeriodicGrid)
    return u.like(_backend.core.window_average(u.values, w, theta, periodic))


def gamma_star(u: GridFunction, v: GridFunction) -> float:
    """Least gamma with u <= gamma * v on the grid."""
    if u.grid != v.grid:
        raise GridMismatch("gamma_star needs both functions on one grid")
    if v.values.min() <= 0:
        i = int(np.argmin(v.values))
        raise NonpositiveComparator(f"comparator is {v.values[i]:.3g} at x={v.grid.x[i]:.6g}")
    return float(np.max(u.values / v.values))


def write_columns(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([fmt(v) for v in row])


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)
