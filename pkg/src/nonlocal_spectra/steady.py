"""KPP nonlinearities and the periodic steady state of M[u] + f(x, u) = 0.

The existence question is decided by the sign of lambda_1(M + f_u(., 0));
the solution itself comes from a monotone iteration squeezed between the
subsolution eps*phi_1 and a constant supersolution.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import _backend, _pycore
from .errors import (
    HypF1Violation,
    InadmissibleInit,
    InputError,
    MaxIterExceeded,
    MonotonicityBroken,
    NoRadiusFound,
    NoSubsolutionFound,
    PreconditionError,
)
from .field import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, check_period, gamma_star
from .kernel import Kernel
from .operator import convolution_matrix, dirichlet_convolution_matrix, steady_defect
from .spectral import EigenResult, aligned_periodic_grid, principal_eig_dirichlet, principal_eig_periodic

MONO_TOL = 1e-12
DEFECT_TOL = 1e-12
DYADIC_MENU = tuple(2.0 ** -k for k in range(41))


class Classification(str, enum.Enum):
    NONTRIVIAL = "nontrivial-exists"
    TRIVIAL = "only-trivial"
    MARGINAL = "marginal"


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """f(x, u) with its u-derivative; ``a`` is f_u(., 0) as a Fourier series."""

    form: str
    a: Coefficient
    M_sup: float
    f: object = field(repr=False)
    fu: object = field(repr=False)
    spec: dict = field(repr=False, default_factory=dict)

    def __call__(self, x, u):
        return self.f(x, u)

    @property
    def R(self) -> float:
        return self.a.R

    def to_dict(self) -> dict:
        return {"form": self.form, "M_sup": self.M_sup, "a": self.a.to_dict()}


def _sample_x(R: float, n: int = 256) -> np.ndarray:
    return -R + 2.0 * R / n * np.arange(n)


def _u_lattice(M_sup: float, step: float) -> np.ndarray:
    u = step * np.arange(1, int(np.floor(M_sup / step + 1e-9)) + 1)
    if u.size == 0 or u[-1] < M_sup - 1e-12:
        u = np.append(u, M_sup)
    if u.size < 2:
        u = np.linspace(M_sup / 10.0, M_sup, 10)
    return u


def check_hyp_f1(nl: Nonlinearity, x, step: float = 0.1):
    """Sampled (hyp f1): f(x,0) = 0, f/u strictly decreasing, f(x, M_sup) <= 0."""
    x = np.asarray(x, dtype=float)
    f0 = nl.f(x, np.zeros_like(x))
    i = int(np.argmax(np.abs(f0)))
    if abs(f0[i]) > DEFECT_TOL:
        raise HypF1Violation("f(x, 0) = 0", x[i], 0.0)
    u = _u_lattice(nl.M_sup, step)
    X, U = np.meshgrid(x, u, indexing="ij")
    q = nl.f(X, U) / U
    bad = np.argwhere(np.diff(q, axis=1) >= 0)
    if bad.size:
        i, j = bad[0]
        raise HypF1Violation("f(x, u)/u strictly decreasing in u", x[i], u[j + 1])
    fM = nl.f(x, np.full_like(x, nl.M_sup))
    i = int(np.argmax(fM))
    if fM[i] > DEFECT_TOL:
        raise HypF1Violation("f(x, u) <= 0 for u >= M_sup", x[i], nl.M_sup)


def kpp(a: Coefficient, x=None) -> Nonlinearity:
    """f(x, u) = u (a(x) - u); M_sup = max of a on the sample points (1 if that is <= 0)."""
    xs = _sample_x(a.R) if x is None else np.asarray(x, dtype=float)
    amax = float(np.max(a(xs)))
    M_sup = amax if amax > 0 else 1.0
    nl = Nonlinearity("kpp", a, M_sup, lambda x, u: u * (a(x) - u), lambda x, u: a(x) - 2.0 * u,
                      {"form": "kpp", "a": a.to_dict()})
    check_hyp_f1(nl, xs)
    return nl


def from_samples(x, u, F, R: float, FU=None, M_sup: float | None = None, spec: dict | None = None) -> Nonlinearity:
    """Custom f from samples F[i, j] = f(x_i, u_j) on x_i = -R + i*2R/n, 0 = u_0 < u_1 < ...

    Between samples f is bilinear (periodic in x, linear extrapolation in u).
    f_u defaults to a second-order finite difference in u.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    F = np.asarray(F, dtype=float)
    n = x.size
    if F.shape != (n, u.size):
        raise InputError(f"f samples have shape {F.shape}, expected {(n, u.size)}")
    if not np.allclose(x, _sample_x(R, n), atol=1e-12 * max(1.0, R)):
        raise InputError("custom x samples must be -R + i*2R/n")
    if u[0] != 0.0 or np.any(np.diff(u) <= 0):
        raise InputError("custom u samples must start at 0 and increase")
    FU = np.gradient(F, u, axis=1, edge_order=2) if FU is None else np.asarray(FU, dtype=float)
    xw = np.append(x, x[0] + 2.0 * R)

    def interpolant(table):
        rgi = RegularGridInterpolator((xw, u), np.vstack([table, table[:1]]), bounds_error=False, fill_value=None)

        def ev(xq, uq):
            xq, uq = np.broadcast_arrays(np.asarray(xq, dtype=float), np.asarray(uq, dtype=float))
            xq = x[0] + np.mod(xq - x[0], 2.0 * R)
            return rgi(np.stack([xq.ravel(), uq.ravel()], axis=-1)).reshape(xq.shape)
        return ev

    if M_sup is None:
        nonpos = np.all(F <= DEFECT_TOL, axis=0)
        # smallest lattice u beyond which f stays <= 0
        idx = [j for j in range(1, u.size) if nonpos[j:].all()]
        # without a sign change fall back to the lattice end; the checks below report the failure
        M_sup = float(u[idx[0]] if idx else u[-1])
    a = Coefficient.from_samples(FU[:, 0], R)
    nl = Nonlinearity("custom", a, float(M_sup), interpolant(F), interpolant(FU), spec or {})
    check_hyp_f1(nl, x)
    return nl


def from_callable(f, R: float, nx: int = 64, u=None, fu=None, M_sup: float | None = None) -> Nonlinearity:
    """Sample a vectorised f(x, u) (and optionally f_u) onto a lattice."""
    x = _sample_x(R, nx)
    u = np.linspace(0.0, 4.0, 81) if u is None else np.asarray(u, dtype=float)
    X, U = np.meshgrid(x, u, indexing="ij")
    FU = None if fu is None else fu(X, U)
    return from_samples(x, u, f(X, U), R, FU, M_sup)


def make_nonlinearity(spec, R: float = 1.0, x=None) -> Nonlinearity:
    """Build from a dict: {"form": "kpp", "a": {...}} or {"form": "custom", "x", "u", "f", ["fu", "M_sup"]}."""
    if isinstance(spec, Nonlinearity):
        return spec
    if isinstance(spec, Coefficient):
        return kpp(spec, x)
    form = spec.get("form", "kpp")
    R = float(spec.get("R", R))
    if form == "kpp":
        a = spec["a"]
        if not isinstance(a, Coefficient):
            a = Coefficient(a.get("mean", 0.0), a.get("cos", ()), a.get("sin", ()), R)
        return kpp(a, x)
    if form == "custom":
        return from_samples(spec["x"], spec["u"], spec["f"], R, spec.get("fu"), spec.get("M_sup"), dict(spec))
    raise InputError(f"unknown nonlinearity form {form!r}")


def classify_lambda(lam: float, margin_tol: float = 1e-6) -> Classification:
    if lam < -margin_tol:
        return Classification.NONTRIVIAL
    if lam > margin_tol:
        return Classification.TRIVIAL
    return Classification.MARGINAL


def classify_existence(J: Kernel, f: Nonlinearity, grid: PeriodicGrid, margin_tol: float = 1e-6,
                       tol: float = 1e-10, tail_tol: float = 1e-14) -> Classification:
    lam = principal_eig_periodic(J, f.a, grid, tol, tail_tol=tail_tol).lambda1
    return classify_lambda(lam, margin_tol)


def _defect(J, f, u: GridFunction, tail_tol) -> np.ndarray:
    return steady_defect(J, f, u, tail_tol)


def subsolution_scale(J: Kernel, f: Nonlinearity, phi1: GridFunction, tail_tol: float = 1e-14) -> float:
    """Largest eps in {1, 1/2, ..., 2^-40} with eps*phi1 a subsolution below M_sup."""
    if phi1.values.min() <= 0:
        raise PreconditionError("phi1 must be positive")
    for eps in DYADIC_MENU:
        u = phi1.like(eps * phi1.values)
        if u.values.max() > f.M_sup * (1 + 1e-12):
            continue
        if _defect(J, f, u, tail_tol).min() >= -DEFECT_TOL:
            return eps
    raise NoSubsolutionFound("no eps down to 2^-40 gives a subsolution; lambda_1 is too close to 0 for this grid")


def lipschitz_shift(f: Nonlinearity, x, umax: float, n: int = 201) -> float:
    """C_f = max(0, -min f_u) over x times [0, umax]."""
    u = np.linspace(0.0, umax, n)
    return max(0.0, -float(np.min(f.fu(np.asarray(x)[:, None], u[None, :]))))


@dataclass(frozen=True, eq=False)
class IterationResult:
    u: GridFunction
    iterations: int
    steps: np.ndarray = field(repr=False)
    tau: float
    C_f: float
    residual: float
    direction: str
    status: str

    def to_dict(self) -> dict:
        return {"direction": self.direction, "iterations": self.iterations, "tau": self.tau,
                "C_f": self.C_f, "residual": self.residual, "status": self.status}


_STATUS = {0: "converged", 1: "max-iter", 2: "not-monotone", 3: "below-floor"}


def monotone_run(J: Kernel, f: Nonlinearity, u0: GridFunction, direction: str = "up", tol: float = 1e-10,
                 max_iter: int = 100_000, floor: float = 0.0, tail_tol: float = 1e-14) -> IterationResult:
    """u <- u + tau (M[u] + f(x, u)), tau = 1/(1 + C_f), from a sub- (up) or supersolution (down).

    ``floor`` > 0 stops a run once max u <= floor (used for decay checks).
    """
    grid = u0.grid
    if not isinstance(grid, PeriodicGrid):
        raise InputError("monotone iteration runs on a periodic grid")
    check_period(f.a, grid)
    if direction not in ("up", "down"):
        raise InputError(f"direction must be 'up' or 'down', got {direction!r}")
    sgn = 1 if direction == "up" else -1
    d = _defect(J, f, u0, tail_tol)
    worst = d.min() if sgn > 0 else -d.max()
    if worst < -DEFECT_TOL:
        kind = "subsolution" if sgn > 0 else "supersolution"
        raise PreconditionError(f"initial guess is not a discrete {kind} (defect off by {-worst:.3g})")
    W = np.ascontiguousarray(convolution_matrix(J, grid, tail_tol))
    C_f = lipschitz_shift(f, grid.x, max(f.M_sup, float(u0.values.max())))
    tau = 1.0 / (1.0 + C_f)
    if f.form == "kpp":
        u, it, steps, status, witness = _backend.core.kpp_monotone(
            W, np.ascontiguousarray(f.a(grid.x)), u0.values.copy(), tau, tol, max_iter, sgn, floor, MONO_TOL)
    else:
        x = grid.x
        u, it, steps, status, witness = _pycore.monotone_loop(
            W, lambda v: f(x, v), u0.values.copy(), tau, tol, max_iter, sgn, floor, MONO_TOL)
    if status == 2:
        raise MonotonicityBroken(f"{direction} iterate moved the wrong way at x={grid.x[witness]:.6g} (step {it})")
    u = GridFunction(grid, u)
    res = float(np.max(np.abs(_defect(J, f, u, tail_tol))))
    if status == 1:
        raise MaxIterExceeded(f"{direction} iteration: step still {steps[-1]:.3g} >= {tol:.3g} after {max_iter} iterations")
    return IterationResult(u, int(it), np.asarray(steps), tau, C_f, res, direction, _STATUS[status])


def monotone_iterate(J: Kernel, f: Nonlinearity, u0: GridFunction, direction: str = "up", tol: float = 1e-10,
                     max_iter: int = 100_000, tail_tol: float = 1e-14) -> GridFunction:
    return monotone_run(J, f, u0, direction, tol, max_iter, tail_tol=tail_tol).u


@dataclass(frozen=True, eq=False)
class SteadyReport:
    lambda1: float
    classification: Classification
    p: GridFunction | None
    residual: float
    iterations: int
    lower_bound: float | None = None
    eps: float | None = None
    up_down_gap: float | None = None
    decay_reached: bool | None = None
    trace: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    @property
    def c(self):
        return self.lower_bound

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "classification": self.classification.value,
                "residual": self.residual, "iterations": self.iterations,
                "lower_bound": self.lower_bound, "eps": self.eps,
                "up_down_gap": self.up_down_gap, "decay_reached": self.decay_reached}


def solve_steady(J: Kernel, f: Nonlinearity, grid: PeriodicGrid, tol: float = 1e-10, max_iter: int = 100_000,
                 margin_tol: float = 1e-6, decay_tol: float = 1e-8, tail_tol: float = 1e-14,
                 eig: EigenResult | None = None) -> SteadyReport:
    eig = eig or principal_eig_periodic(J, f.a, grid, tol, tail_tol=tail_tol)
    cls = classify_lambda(eig.lambda1, margin_tol)
    top = GridFunction(grid, np.full(grid.N, f.M_sup))
    if cls is Classification.NONTRIVIAL:
        eps = subsolution_scale(J, f, eig.phi, tail_tol)
        up = monotone_run(J, f, eig.phi.like(eps * eig.phi.values), "up", tol, max_iter, tail_tol=tail_tol)
        down = monotone_run(J, f, top, "down", tol, max_iter, tail_tol=tail_tol)
        gap = float(np.max(np.abs(up.u.values - down.u.values)))
        p = up.u
        return SteadyReport(eig.lambda1, cls, p, up.residual, up.iterations, float(p.values.min()), eps, gap,
                            None, up.steps)
    if cls is Classification.TRIVIAL:
        down = monotone_run(J, f, top, "down", tol, max_iter, floor=decay_tol, tail_tol=tail_tol)
        reached = bool(down.u.values.max() <= decay_tol)
        return SteadyReport(eig.lambda1, cls, None, down.residual, down.iterations, None, None, None,
                            reached, down.steps)
    return SteadyReport(eig.lambda1, cls, None, float("nan"), 0)


def decay_run(J: Kernel, f: Nonlinearity, grid: PeriodicGrid, start: float, decay_tol: float = 1e-8,
              max_iter: int = 100_000, tail_tol: float = 1e-14) -> IterationResult:
    """Down-iteration from the constant ``start`` until sup u <= decay_tol."""
    u0 = GridFunction(grid, np.full(grid.N, float(start)))
    return monotone_run(J, f, u0, "down", 0.0, max_iter, floor=decay_tol, tail_tol=tail_tol)


@dataclass(frozen=True, eq=False)
class CompactSubsolution:
    gamma0: float
    phi: GridFunction
    r: float
    lambda_r: float
    lambda1: float
    defect_min: float

    def __iter__(self):
        return iter((self.gamma0, self.phi, self.r))

    @property
    def center_value(self) -> float:
        """phi_{r,y}(y) by linear interpolation."""
        return float(np.interp(self.phi.grid.y, self.phi.grid.x, self.phi.values))

    def to_dict(self) -> dict:
        return {"gamma0": self.gamma0, "r": self.r, "y": self.phi.grid.y, "lambda_r": self.lambda_r,
                "lambda1": self.lambda1, "defect_min": self.defect_min, "center_value": self.center_value}


def _reach(J: Kernel) -> float:
    lo, hi = J.support
    return max(abs(lo), abs(hi))


def compact_subsolution(J: Kernel, f: Nonlinearity, y: float, N_per_unit: int = 16, tol: float = 1e-10,
                        r_cap: float = 128.0) -> CompactSubsolution:
    """gamma0 * phi_{r,y}, extended by zero, as a subsolution on the whole line.

    r doubles from 2R until lambda_{r,y} < lambda_1 / 2 (at most r_cap * R).
    The defect is checked on a covering lattice reaching one kernel width
    beyond the interval, where the extended function vanishes.
    """
    R = f.R
    lam1 = principal_eig_periodic(J, f.a, aligned_periodic_grid(R, y, N_per_unit), tol).lambda1
    if lam1 >= 0:
        raise PreconditionError(f"compact subsolutions need lambda_1 < 0, got {lam1:.6g}")
    r = 2.0 * R
    while True:
        res = principal_eig_dirichlet(J, f.a, IntervalGrid.with_spacing(y, r, N_per_unit), tol)
        if res.lambda1 < lam1 / 2:
            break
        r *= 2.0
        if r > r_cap * R:
            raise NoRadiusFound(f"lambda_r,y stays >= lambda_1/2 up to r = {r_cap}R")
    h = 1.0 / N_per_unit
    pad = int(np.ceil(_reach(J) / h)) + 1
    cover = IntervalGrid(y, r + pad * h, res.phi.grid.N + 2 * pad)
    W = dirichlet_convolution_matrix(J, cover)
    phi_ext = np.zeros(cover.N)
    phi_ext[pad:pad + res.phi.grid.N] = res.phi.values
    xc = cover.x
    for g in DYADIC_MENU:
        u = g * phi_ext
        d = W @ u - u + f(xc, u)
        if d.min() >= -DEFECT_TOL:
            return CompactSubsolution(g, res.phi, r, res.lambda1, lam1, float(d.min()))
    raise NoSubsolutionFound(f"no gamma down to 2^-40 makes gamma*phi_r,y a subsolution (y={y})")


def periodic_interp(u: GridFunction, x) -> np.ndarray:
    g = u.grid
    return np.interp(np.asarray(x, dtype=float), g.x, u.values, period=g.period)


@dataclass(frozen=True, eq=False)
class UniquenessReport:
    directions: tuple[str, ...]
    limits: tuple[GridFunction, ...] = field(repr=False)
    distances: np.ndarray = field(repr=False)
    gamma_stars: tuple[float, ...]
    uniq_tol: float

    @property
    def max_distance(self) -> float:
        return float(self.distances.max()) if self.distances.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_distance <= self.uniq_tol and all(abs(g - 1.0) <= self.uniq_tol for g in self.gamma_stars)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "directions": list(self.directions), "max_distance": self.max_distance,
                "gamma_stars": list(self.gamma_stars), "uniq_tol": self.uniq_tol}


def uniqueness_probe(J: Kernel, f: Nonlinearity, grid: PeriodicGrid, inits, tol: float = 1e-10,
                     max_iter: int = 100_000, uniq_tol: float = 1e-6, tail_tol: float = 1e-14,
                     p: GridFunction | None = None) -> UniquenessReport:
    """Iterate from every init and compare the limits with each other and with p.

    Subsolution inits run up, supersolution inits run down. ``p`` defaults
    to the first limit.
    """
    if not J.symmetric:
        raise PreconditionError("uniqueness probe needs a symmetric kernel")
    lam = principal_eig_periodic(J, f.a, grid, tol, tail_tol=tail_tol).lambda1
    if lam >= 0:
        raise PreconditionError(f"uniqueness probe needs lambda_1 < 0, got {lam:.6g}")
    dirs, limits = [], []
    for u0 in inits:
        if not isinstance(u0, GridFunction):
            u0 = GridFunction(grid, np.broadcast_to(np.asarray(u0, dtype=float), (grid.N,)))
        d = _defect(J, f, u0, tail_tol)
        if d.min() >= -DEFECT_TOL:
            direction = "up"
        elif d.max() <= DEFECT_TOL:
            direction = "down"
        else:
            i = int(np.argmin(d))
            raise InadmissibleInit(f"init is neither a sub- nor a supersolution (defect {d[i]:.3g} at x={grid.x[i]:.6g})")
        dirs.append(direction)
        limits.append(monotone_run(J, f, u0, direction, tol, max_iter, tail_tol=tail_tol).u)
    p = p or limits[0]
    V = np.array([u.values for u in limits])
    dist = np.max(np.abs(V[:, None, :] - V[None, :, :]), axis=-1)
    gs = tuple(gamma_star(u, p) for u in limits)
    return UniquenessReport(tuple(dirs), tuple(limits), dist, gs, uniq_tol)


@dataclass(frozen=True)
class SweepRow:
    delta: float
    lambda1: float
    classification: Classification
    min_p: float | None


def sweep_delta(J: Kernel, a: Coefficient, grid: PeriodicGrid, deltas, margin_tol: float = 1e-6,
                tol: float = 1e-10, max_iter: int = 100_000, solve: bool = True, threads: int = 1,
                tail_tol: float = 1e-14) -> list[SweepRow]:
    """lambda_1 and classification for a + delta over ``deltas``; rows in input order."""
    def point(delta):
        ad = a.shifted(delta)
        eig = principal_eig_periodic(J, ad, grid, tol, tail_tol=tail_tol)
        cls = classify_lambda(eig.lambda1, margin_tol)
        min_p = None
        if solve and cls is Classification.NONTRIVIAL:
            rep = solve_steady(J, kpp(ad, grid.x), grid, tol, max_iter, margin_tol, tail_tol=tail_tol, eig=eig)
            min_p = rep.lower_bound
        return SweepRow(float(delta), eig.lambda1, cls, min_p)

    deltas = [float(d) for d in deltas]
    if threads <= 1:
        return [point(d) for d in deltas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(point, deltas))
