"""Dispersal kernels J, their convolution powers J_p and periodized matrices."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from . import _backend
from .errors import (
    IterationCap,
    NonPositiveParameter,
    ResolutionTooCoarse,
    SupportExcludesOrigin,
    TailTolTooSmall,
    InputError,
)
from .field import PeriodicGrid, write_columns

FAMILIES = ("uniform", "tent", "truncated-gaussian")
_JUMP_TOL = 1e-12


@dataclass(frozen=True)
class Kernel:
    """A compactly supported dispersal kernel.

    ``params`` is (halfwidth,) for uniform, (halfwidth, shift) for tent and
    (stddev, cutoff) for truncated-gaussian. At a jump discontinuity the
    evaluator returns the mean of the one-sided limits, which makes uniform
    lattice sums exact trapezoid rules.
    ``scale`` is the total mass; anything other than 1 is a deliberate fault.
    """

    family: str
    params: tuple[float, ...]
    scale: float = 1.0

    @property
    def support(self) -> tuple[float, float]:
        if self.family == "uniform":
            (l,) = self.params
            return (-l, l)
        if self.family == "tent":
            l, s = self.params
            return (s - l, s + l)
        sigma, c = self.params
        return (-c * sigma, c * sigma)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        lo, hi = self.support
        if self.family == "tent":
            return (lo, self.params[1], hi)
        return (lo, hi)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "uniform":
            (l,) = self.params
            out = np.where(np.abs(x) < l, 0.5 / l, 0.0)
            out = np.where(np.abs(np.abs(x) - l) <= _JUMP_TOL * max(1.0, l), 0.25 / l, out)
        elif self.family == "tent":
            l, s = self.params
            out = np.clip(l - np.abs(x - s), 0.0, None) / (l * l)
        else:
            sigma, c = self.params
            z = special.ndtr(c) - special.ndtr(-c)
            cut = c * sigma
            out = np.where(np.abs(x) < cut, np.exp(-0.5 * (x / sigma) ** 2), 0.0)
            jump = np.abs(np.abs(x) - cut) <= _JUMP_TOL * max(1.0, cut)
            out = np.where(jump, 0.5 * np.exp(-0.5 * c * c), out)
            out = out / (sigma * np.sqrt(2.0 * np.pi) * z)
        return self.scale * out

    @cached_property
    def mass(self) -> float:
        """Adaptive quadrature of J over its support."""
        lo, hi = self.support
        total, _ = integrate.quad(lambda t: float(self(t)), lo, hi,
                                  points=self.breakpoints[1:-1] or None,
                                  epsabs=1e-14, epsrel=1e-13, limit=200)
        return total

    @cached_property
    def symmetric(self) -> bool:
        return symmetry_defect(self) <= 1e-12

    def to_dict(self) -> dict:
        names = {"uniform": ("halfwidth",), "tent": ("halfwidth", "shift"),
                 "truncated-gaussian": ("stddev", "cutoff")}[self.family]
        out = {"family": self.family, **dict(zip(names, self.params))}
        if self.scale != 1.0:
            out["mass"] = self.scale
        return out


def make_kernel(spec, **params) -> Kernel:
    """Build a kernel from ``{"family": ..., <params>}`` or ``make_kernel("tent", halfwidth=1, shift=.3)``."""
    if isinstance(spec, str):
        spec = {"family": spec, **params}
    family = spec.get("family")
    if family not in FAMILIES:
        raise InputError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")
    mass = float(spec.get("mass", 1.0))
    if family == "uniform":
        values = (float(spec["halfwidth"]),)
    elif family == "tent":
        values = (float(spec["halfwidth"]), float(spec.get("shift", 0.0)))
    else:
        values = (float(spec["stddev"]), float(spec.get("cutoff", 6.0)))
    positive = values[:1] + (values[1:] if family == "truncated-gaussian" else ())
    for v in positive + (mass,):
        if not v > 0:
            raise NonPositiveParameter(f"{family} parameters must be positive, got {values}, mass={mass}")
    if family == "tent" and not abs(values[1]) < values[0]:
        raise SupportExcludesOrigin(
            f"tent shift {values[1]} puts 0 outside the open support ({values[1] - values[0]}, {values[1] + values[0]})")
    return Kernel(family, values, mass)


def symmetry_defect(J: Kernel, n: int = 4097) -> float:
    lo, hi = J.support
    L = 1.05 * max(abs(lo), abs(hi))
    x = np.linspace(0.0, L, n)
    return float(np.max(np.abs(J(x) - J(-x))))


@dataclass(frozen=True)
class ValidationReport:
    j1_ok: bool
    j2_ok: bool
    symmetric: bool
    a: float | None
    b: float | None
    mass: float
    nonnegative: bool
    symmetry_defect: float

    @property
    def ok(self) -> bool:
        return self.j1_ok and self.j2_ok

    def to_dict(self) -> dict:
        return {"j1_ok": self.j1_ok, "j2_ok": self.j2_ok, "symmetric": self.symmetric,
                "a": self.a, "b": self.b, "mass": self.mass,
                "nonnegative": self.nonnegative, "symmetry_defect": self.symmetry_defect}


def validate_kernel(J: Kernel, tol: float = 1e-12, samples: int = 4097) -> ValidationReport:
    lo, hi = J.support
    L = 1.05 * max(abs(lo), abs(hi))
    x = np.linspace(-L, L, max(samples, 64))
    values = J(x)
    nonneg = bool(values.min() >= 0)
    outside = values[(x < lo - 1e-9) | (x > hi + 1e-9)]
    mass = J.mass
    j1 = nonneg and not np.any(outside) and abs(mass - 1.0) <= tol
    a = _witness(J, lo, x[x < 0], values[x < 0])
    b = _witness(J, hi, x[x > 0], values[x > 0])
    defect = symmetry_defect(J)
    return ValidationReport(j1, a is not None and b is not None, defect <= tol,
                            a, b, mass, nonneg, defect)


def _witness(J, end, xs, vals):
    mid = 0.5 * end
    if end != 0 and J(mid) > 0:
        return float(mid)
    hits = xs[vals > 0]
    if hits.size == 0:
        return None
    return float(hits[np.argmin(np.abs(hits - mid))])


@dataclass(frozen=True, eq=False)
class KernelPower:
    """J_p = J * ... * J sampled at lo + k*dx on its support."""

    base: Kernel
    p: int
    lo: float
    dx: float
    samples: np.ndarray

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.lo + self.dx * (self.samples.size - 1))

    @property
    def nodes(self) -> np.ndarray:
        return self.lo + self.dx * np.arange(self.samples.size)

    @property
    def mass(self) -> float:
        return float(self.dx * self.samples.sum())

    def __call__(self, x) -> np.ndarray:
        if self.p == 1:
            return self.base(x)
        return np.interp(x, self.nodes, self.samples, left=0.0, right=0.0)

    def to_csv(self, path):
        write_columns(path, ("x", f"J_{self.p}"), [self.nodes, self.samples])


def _powers(J: Kernel, resolution: int):
    """Yield J_1, J_2, ... by direct quadrature of int J(z) J_{p-1}(x - z) dz."""
    if resolution < 128:
        raise ResolutionTooCoarse(f"resolution {resolution} < 128 samples per support")
    lo, hi = J.support
    dx = (hi - lo) / resolution
    f = J(lo + dx * np.arange(resolution + 1))
    g = f
    p = 1
    yield KernelPower(J, 1, lo, dx, f)
    while True:
        p += 1
        g = _backend.core.direct_convolve(f, g, dx)
        g *= J.scale ** p / (dx * g.sum())
        yield KernelPower(J, p, p * lo, dx, g)


def convolve_power(J: Kernel, p: int, resolution: int = 512) -> KernelPower:
    if p < 1:
        raise InputError(f"power must be >= 1, got {p}")
    for Jp in _powers(J, resolution):
        if Jp.p == p:
            return Jp


def support_cover(J, k: int) -> tuple[float, float]:
    """k-fold Minkowski sum of supp(J); ``J`` may be a Kernel or an interval."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    lo, hi = J.support if isinstance(J, Kernel) else J
    return (k * lo, k * hi)


def min_power_for_coverage(J: Kernel, R: float, resolution: int = 512, check_cells: int = 512) -> int:
    """Smallest p with J_p > 0 at the midpoints of a grid of (-2R-1, 2R+1)."""
    return coverage(J, R, resolution, check_cells)[0]


def coverage(J: Kernel, R: float, resolution: int = 512, check_cells: int = 512):
    """(p, margin): the covering power and min J_p over the check points."""
    L = 2.0 * R + 1.0
    h = 2.0 * L / check_cells
    xs = -L + (np.arange(check_cells) + 0.5) * h
    lo, hi = J.support
    if not (lo < 0 < hi):
        raise SupportExcludesOrigin(f"support {J.support} does not straddle 0")
    for Jp in _powers(J, resolution):
        if Jp.p > 10_000:
            raise IterationCap("no power up to 10000 covers (-2R-1, 2R+1); degenerate kernel sampling")
        plo, phi = Jp.support
        if plo >= xs[0] or phi <= xs[-1]:
            continue
        m = float(Jp(xs).min())
        if m > 0:
            return Jp.p, m


def lattice_mass(J, h: float) -> float:
    """h * sum_m J(m h): the discrete mass of J seen by a lattice of spacing h."""
    lo, hi = J.support
    m = np.arange(int(np.floor(lo / h)) - 1, int(np.ceil(hi / h)) + 2)
    return float(h * np.sum(J(m * h)))


@dataclass(frozen=True, eq=False)
class PeriodizedKernelMatrix:
    """K[i, j] ~ sum_k J_p(x_i + 2kR - x_j), rows scaled so that h * sum_j K[i, j] = 1."""

    matrix: np.ndarray
    h: float
    K_max: int
    p: int
    raw_row_mass: np.ndarray
    tail: float

    @property
    def operator(self) -> np.ndarray:
        """h * K: the quadrature matrix of u -> J_p periodic convolution."""
        return self.h * self.matrix


def periodize(Jp, grid: PeriodicGrid, tail_tol: float = 1e-14) -> PeriodizedKernelMatrix:
    """Assemble the periodized kernel on the grid.

    Offsets are integer multiples of h, so the matrix depends on i - j only
    and is exactly symmetric for an even kernel. K_max is the fewest images
    per side for which every row's omitted quadrature mass is below tail_tol.
    """
    if isinstance(Jp, Kernel):
        Jp = KernelPower(Jp, 1, Jp.support[0], 0.0, np.empty(0))
    N, h = grid.N, grid.h
    lo, hi = Jp.support if Jp.p > 1 else Jp.base.support
    reach = max(abs(lo), abs(hi))
    m = np.arange(-(N - 1), N)
    # contributions of image k to every raw offset; stop once images leave the support
    images = {0: Jp(m * h)}
    k = 1
    while (k * N - (N - 1)) * h <= reach * (1 + 1e-12):
        if k > 1_000_000:
            raise TailTolTooSmall("more than 1e6 images needed")
        images[k] = Jp((m + k * N) * h)
        images[-k] = Jp((m - k * N) * h)
        k += 1
    kfull = k - 1
    # row i sees offsets i-N+1 .. i, i.e. indices i .. i+N-1 of m
    csum = {k: np.concatenate(([0.0], np.cumsum(v))) for k, v in images.items()}
    rows = np.arange(N)
    contrib = {k: h * (c[rows + N] - c[rows]) for k, c in csum.items()}
    K_max = None
    tail = 0.0
    for K in range(kfull + 1):
        omitted = sum((contrib[k] for k in contrib if abs(k) > K), np.zeros(N))
        tail = float(omitted.max())
        if tail < tail_tol:
            K_max = K
            break
    if K_max is None:
        raise TailTolTooSmall(f"tail_tol={tail_tol} cannot be met (omitted mass {tail:.3g} at full support)")
    g = sum(images[k] for k in range(-K_max, K_max + 1))
    idx = rows[:, None] - rows[None, :] + (N - 1)
    raw = g[idx]
    row_mass = h * raw.sum(axis=1)
    return PeriodizedKernelMatrix(raw / row_mass[:, None], h, K_max, Jp.p, row_mass, tail)
