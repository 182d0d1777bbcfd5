"""Principal eigenpairs of -(M + a), periodic and Dirichlet.

Eigenvalues are computed through the shifted nonnegative matrix L + b
(b = a + k_shift), whose Perron root mu relates to lambda by
mu = -lambda + 1 + k_shift.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _backend
from .errors import (
    CertificateFailed,
    ComplexPrincipal,
    InputError,
    NoConvergence,
    NonPositiveEigenvector,
    PreconditionError,
    ReduciblePattern,
    ZeroFunction,
)
from .field import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, check_period, write_columns
from .kernel import Kernel, convolve_power, min_power_for_coverage, periodize
from .operator import (
    DirichletOperator,
    PeriodicOperator,
    _Operator,
    assemble_dirichlet,
    assemble_periodic,
    convolution_matrix,
)

METHODS = ("noda", "power")


class NonVariationalWarning(UserWarning):
    """Rayleigh quotient requested for an asymmetric kernel."""


@dataclass(frozen=True, eq=False)
class EigenResult:
    lambda1: float
    phi: GridFunction
    mu: float
    residual: float
    iterations: int
    gap: float | None = None
    k_shift: float = 0.0
    method: str = "noda"

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "mu": self.mu, "residual": self.residual,
                "iterations": self.iterations, "gap": self.gap,
                "k_shift": self.k_shift, "method": self.method}

    def to_csv(self, path):
        self.phi.to_csv(path, header=("x", "phi"))


def _norm_target(grid) -> float:
    # periodic: int phi^2 = 2R over one period; Dirichlet: int phi^2 = 1
    return grid.measure if isinstance(grid, PeriodicGrid) else 1.0


def _finish(op: _Operator, x, mu, iterations, method, gap=None) -> EigenResult:
    x = np.asarray(x, dtype=float)
    if x.sum() < 0:
        x = -x
    phi = x * np.sqrt(_norm_target(op.grid) / (op.grid.h * np.dot(x, x)))
    if phi.min() <= 0:
        i = int(np.argmin(phi))
        raise NonPositiveEigenvector(f"eigenvector is {phi[i]:.3g} at x={op.grid.x[i]:.6g}")
    lam = op.lam_from_mu(mu)
    res = float(np.max(np.abs(op.A @ phi + lam * phi)))
    return EigenResult(lam, GridFunction(op.grid, phi), mu, res, iterations, gap, op.k_shift, method)


def _perron(B, scale, tol, max_iter, method, warmup):
    """Perron root and vector of a nonnegative irreducible matrix.

    Starts from the all-ones vector. ``warmup`` plain power steps come first
    and must leave the iterate strictly positive. "noda" then runs inverse
    iteration with the Collatz-Wielandt upper bound max(Bx/x) as shift:
    (sigma - B)^-1 is a positive matrix for sigma > rho, so iterates stay in
    the cone, and the shift converges to rho superlinearly. Convergence is
    declared on the sup-norm eigen-residual of the normalised vector.
    """
    n = B.shape[0]
    x = np.ones(n) / np.sqrt(n)
    for _ in range(warmup):
        x = B @ x
        x /= np.linalg.norm(x)
    if not np.all(x > 0):
        raise ReduciblePattern(f"iterate not strictly positive after {warmup} steps")
    if method == "power":
        x, mu, res, it = _backend.core.power_iterate(B, x, scale, tol, max_iter)
        if res > tol:
            raise NoConvergence(f"power iteration residual {res:.3g} > {tol:.3g} after {max_iter} steps")
        return x, mu, it + warmup
    eye = np.eye(n)
    for it in range(1, max_iter + 1):
        y = B @ x
        mu = float(x @ y)
        res = scale * float(np.max(np.abs(y - mu * x)))
        if res <= tol:
            return x, mu, it + warmup
        sigma = float(np.max(y / x))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            try:
                z = scipy.linalg.solve(sigma * eye - B, x, check_finite=False)
            except (scipy.linalg.LinAlgError, ValueError):
                z = None
        if z is None or not np.all(np.isfinite(z)) or not np.all(z > 0):
            # shift hit rho to machine precision; finish with plain power steps
            x, mu, res, extra = _backend.core.power_iterate(B, y, scale, tol, max(max_iter - it, 1))
            if res > tol:
                raise NoConvergence(f"residual {res:.3g} > {tol:.3g} after {it + extra} steps")
            return x, mu, it + extra + warmup
        x = z / np.linalg.norm(z)
    raise NoConvergence(f"residual {res:.3g} > {tol:.3g} after {max_iter} steps")


def principal_eig(op: _Operator, tol: float = 1e-10, max_iter: int = 100_000,
                  method: str = "noda", warmup: int = 1) -> EigenResult:
    if tol < 1e-13:
        raise InputError(f"tol={tol} is below the supported 1e-13")
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; expected one of {METHODS}")
    scale = np.sqrt(_norm_target(op.grid) / op.grid.h)
    x, mu, it = _perron(op.B, scale, tol, max_iter, method, warmup)
    return _finish(op, x, mu, it, method)


def principal_eig_periodic(J: Kernel, a: Coefficient, grid: PeriodicGrid, tol: float = 1e-10,
                           max_iter: int = 100_000, method: str = "noda",
                           tail_tol: float = 1e-14) -> EigenResult:
    op = assemble_periodic(J, a, grid, tail_tol)
    p_cover = min_power_for_coverage(J, grid.R)
    return principal_eig(op, tol, max_iter, method, warmup=p_cover)


def principal_eig_dirichlet(J: Kernel, a: Coefficient, grid: IntervalGrid, tol: float = 1e-10,
                            max_iter: int = 100_000, method: str = "noda") -> EigenResult:
    op = assemble_dirichlet(J, a, grid)
    return principal_eig(op, tol, max_iter, method, warmup=1)


def principal_eig_dense_oracle(op) -> EigenResult:
    """Full eigendecomposition of L + b; accepts an operator or a bare nonnegative matrix.

    For a bare matrix the result's ``phi`` is a plain unit-norm vector and
    lambda1 is reported as -mu.
    """
    B = op.B if isinstance(op, _Operator) else np.asarray(op, dtype=float)
    if B.shape[0] > 2048:
        raise InputError(f"dense oracle limited to N <= 2048, got {B.shape[0]}")
    w, V = np.linalg.eig(B)
    i = int(np.argmax(w.real))
    if abs(w[i].imag) > 1e-10:
        raise ComplexPrincipal(f"principal eigenvalue {w[i]} is not real")
    mu = float(w[i].real)
    rest = np.delete(w, i)
    gap = float(np.max(np.abs(rest)) / mu) if rest.size else 0.0
    v = V[:, i].real
    if v.sum() < 0:
        v = -v
    if not isinstance(op, _Operator):
        if v.min() <= 0:
            raise NonPositiveEigenvector("dense principal eigenvector has a nonpositive entry")
        return EigenResult(-mu, v / np.linalg.norm(v), mu, float(np.max(np.abs(B @ v - mu * v))), 0, gap, 0.0, "dense")
    return _finish(op, v, mu, 0, "dense", gap)


def rayleigh_quotient(J: Kernel, a: Coefficient, phi: GridFunction, tail_tol: float = 1e-14) -> float:
    """-int((M + a) phi * phi) / int(phi^2); variational only for symmetric J."""
    if not np.any(phi.values):
        raise ZeroFunction("Rayleigh quotient of the zero function")
    if not J.symmetric:
        warnings.warn("kernel is not symmetric; the quotient has no variational meaning",
                      NonVariationalWarning, stacklevel=2)
    if isinstance(phi.grid, PeriodicGrid):
        op = assemble_periodic(J, a, phi.grid, tail_tol)
    else:
        op = assemble_dirichlet(J, a, phi.grid)
    u = phi.values / np.abs(phi.values).max()  # scale-free; avoids underflow in u.u
    return float(-np.dot(op.A @ u, u) / np.dot(u, u))


@dataclass(frozen=True, eq=False)
class ConvergenceTable:
    y: float
    radii: tuple[float, ...]
    lambdas: tuple[float, ...]
    lambda1: float
    N_per_unit: int
    results: tuple[EigenResult, ...] = field(repr=False, default=())

    @property
    def gaps(self) -> np.ndarray:
        return np.asarray(self.lambdas) - self.lambda1

    @property
    def final_gap(self) -> float:
        return float(self.gaps[-1])

    def to_csv(self, path):
        write_columns(path, ("r", "lambda"), [self.radii, self.lambdas])

    def to_dict(self) -> dict:
        return {"y": self.y, "N_per_unit": self.N_per_unit, "lambda1": self.lambda1,
                "radii": list(self.radii), "lambdas": list(self.lambdas),
                "final_gap": self.final_gap}


def aligned_periodic_grid(R: float, y: float, N_per_unit: int) -> PeriodicGrid:
    """Periodic grid whose nodes coincide with the midpoints of every IntervalGrid
    centred at y with radius a multiple of 1/N_per_unit."""
    h = 1.0 / N_per_unit
    N = int(round(2.0 * R * N_per_unit))
    if N < 8 or N % 2 or abs(N * h - 2.0 * R) > 1e-12 * max(1.0, R):
        raise InputError(f"2R*N_per_unit must be an even integer >= 8 (R={R}, N_per_unit={N_per_unit})")
    offset = float(np.mod(y + 0.5 * h + R, h))
    if offset > h * (1 - 1e-12):
        offset = 0.0
    return PeriodicGrid(R, N, offset)


def dirichlet_convergence_study(J: Kernel, a: Coefficient, y: float, radii, N_per_unit: int = 16,
                                tol: float = 1e-10, max_iter: int = 100_000,
                                method: str = "noda") -> ConvergenceTable:
    """lambda_{r,y} for increasing r next to the periodic lambda_1 on the same lattice.

    With matching lattices the Dirichlet matrix is a principal submatrix of a
    large periodic one, so lambda_{r,y} >= lambda_1 holds on the grid too.
    """
    radii = tuple(float(r) for r in radii)
    if not J.symmetric:
        raise PreconditionError("convergence study needs a symmetric kernel")
    if any(r2 <= r1 for r1, r2 in zip(radii, radii[1:])):
        raise InputError(f"radii must increase, got {radii}")
    for r in radii:
        if abs(2 * r * N_per_unit - round(2 * r * N_per_unit)) > 1e-9:
            raise InputError(f"radius {r} is not a multiple of the spacing 1/{N_per_unit}")
    grid = aligned_periodic_grid(a.R, y, N_per_unit)
    lam1 = principal_eig_periodic(J, a, grid, tol, max_iter, method).lambda1
    results = tuple(principal_eig_dirichlet(J, a, IntervalGrid.with_spacing(y, r, N_per_unit),
                                            tol, max_iter, method) for r in radii)
    return ConvergenceTable(y, radii, tuple(r.lambda1 for r in results), lam1, N_per_unit, results)


@dataclass(frozen=True, eq=False)
class CertificateResult:
    p: int
    sigma: float
    x0: float
    epsilon: float
    gamma: float
    delta: float
    v: GridFunction
    margin: float
    c: float
    k: float
    relative_margin: float = float("nan")
    continuum_bound: float = 0.25

    def to_dict(self) -> dict:
        return {"p": self.p, "sigma": self.sigma, "x0": self.x0, "epsilon": self.epsilon,
                "gamma": self.gamma, "delta": self.delta, "margin": self.margin,
                "relative_margin": self.relative_margin,
                "c": self.c, "k": self.k, "continuum_bound": self.continuum_bound}


def smoothstep_bump(dist, eps):
    """C^2 cutoff: 1 for dist <= eps, 0 for dist >= 2 eps."""
    t = np.clip((np.asarray(dist) - eps) / eps, 0.0, 1.0)
    return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def solve_gamma(c: float, k: float, eps: float) -> float:
    """gamma with (2c/k) log(1 + k eps / gamma) - 1 = 1/2, by bisection in log(gamma).

    Returns the lower end of the final bracket, so the left side stays
    strictly above 1/2. For k = 0 the limit 2 c eps / gamma = 3/2 is used.
    """
    if k <= 0:
        return 4.0 * c * eps / 3.0

    def g(log_gamma):
        return 2.0 * c / k * np.log1p(k * eps * np.exp(-log_gamma)) - 1.5

    lo, hi = np.log(1e-300), np.log(k * eps) + 50.0
    if g(lo) <= 0:
        raise CertificateFailed(float("nan"), f"gamma underflows: k/c = {k / c:.3g} is too large")
    while g(hi) > 0:
        hi += 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(lo)):
            break
    return float(np.exp(lo))


def _periodic_distance(x, x0, R):
    return np.abs((x - x0 + R) % (2.0 * R) - R)


def kpp_certificate(J: Kernel, b: Coefficient, grid: PeriodicGrid, resolution: int = 512,
                    tail_tol: float = 1e-14, eps_menu=(0.25, 0.125, 0.0625)) -> CertificateResult:
    """Grid version of the test-function construction L^p v + b^p v >= (sigma^p + delta) v."""
    check_period(b, grid)
    bv = b(grid.x)
    if bv.min() <= 0:
        raise PreconditionError(f"b must be positive on the grid, min is {bv.min():.6g}")
    R, h = grid.R, grid.h
    p = min_power_for_coverage(J, R, resolution)
    P = periodize(convolve_power(J, p, resolution), grid, tail_tol)
    i0 = int(np.argmax(bv))
    x0, sigma = float(grid.x[i0]), float(bv[i0])
    # the window is recentred on x0, so containment reads 2*eps < R
    for frac in eps_menu:
        eps = frac * R
        if 2 * eps < R and eps >= h:
            break
    else:
        raise CertificateFailed(float("nan"), f"grid too coarse: no eps in the menu resolves h={h}")
    c = float(P.matrix.min())
    if c <= 0:
        raise CertificateFailed(float("nan"), f"periodized J_{p} is not positive on the grid")
    k = p * b.sup_bound ** (p - 1) * b.lipschitz
    gamma = solve_gamma(c, k, eps)
    delta = gamma / 4.0
    bp = bv ** p
    dist = _periodic_distance(grid.x, x0, R)
    v = np.where(dist < 2 * eps, smoothstep_bump(dist, eps) / (sigma ** p - bp + gamma), 0.0)
    defect = P.operator @ v + bp * v - (sigma ** p + delta) * v
    margin = float(defect.min())
    if margin < 0:
        raise CertificateFailed(margin)
    on = v > 0
    rel = float(np.min(defect[on] / v[on]))
    return CertificateResult(p, sigma, x0, eps, gamma, delta, GridFunction(grid, v), margin, c, k, rel)


def certificate_margin_by_powers(J: Kernel, b: Coefficient, cert: CertificateResult,
                                 tail_tol: float = 1e-14) -> float:
    """Margin of a certificate with L^p evaluated as p applications of the grid J*."""
    grid = cert.v.grid
    W = convolution_matrix(J, grid, tail_tol)
    v = cert.v.values
    Lpv = v
    for _ in range(cert.p):
        Lpv = W @ Lpv
    bp = b(grid.x) ** cert.p
    return float(np.min(Lpv + bp * v - (cert.sigma ** cert.p + cert.delta) * v))
