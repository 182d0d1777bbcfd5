"""Strong maximum principle checks and the cross-module invariant suite."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateFailed, HypothesisViolated, InputError, PreconditionError, SolverError
from .field import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, mollify
from .kernel import convolve_power, coverage, periodize, support_cover, validate_kernel
from .operator import assemble_periodic, convolution_matrix, dirichlet_convolution_matrix
from .spectral import (
    aligned_periodic_grid,
    kpp_certificate,
    principal_eig_dense_oracle,
    principal_eig_dirichlet,
    principal_eig_periodic,
    rayleigh_quotient,
)
from .steady import Classification, compact_subsolution, monotone_run, periodic_interp, solve_steady

BRANCHES = ("strictly-negative", "identically-zero", "inconclusive")


def _matrix(J, grid, tail_tol=1e-14):
    if isinstance(grid, PeriodicGrid):
        return convolution_matrix(J, grid, tail_tol)
    return dirichlet_convolution_matrix(J, grid)


def _values(c, grid) -> np.ndarray:
    if isinstance(c, GridFunction):
        if c.grid != grid:
            raise InputError("c and u must share a grid")
        return c.values
    if isinstance(c, Coefficient):
        return c(grid.x)
    return np.broadcast_to(np.asarray(c, dtype=float), (grid.N,))


@dataclass(frozen=True, eq=False)
class StrongMaxReport:
    hypothesis_ok: bool
    branch: str
    witness: float | None
    defect_min: float
    window_maxima: np.ndarray = field(repr=False)
    u_eps: GridFunction = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"hypothesis_ok": self.hypothesis_ok, "branch": self.branch, "witness": self.witness,
                "defect_min": self.defect_min, "window_maxima": [float(v) for v in self.window_maxima]}


def _windows(grid, R: float):
    """Index blocks of length 2R, sliding by R; a periodic grid is one window."""
    if isinstance(grid, PeriodicGrid):
        return [np.arange(grid.N)]
    n = max(1, int(round(2 * R / grid.h)))
    stride = max(1, n // 2)
    starts = range(0, max(grid.N - n, 0) + 1, stride)
    return [np.arange(s, min(s + n, grid.N)) for s in starts]


def strong_max_check(J, c, u: GridFunction, eps: float, tol: float = 1e-10, R: float | None = None,
                     raise_on_violation: bool = False, tail_tol: float = 1e-14) -> StrongMaxReport:
    """Grid version of the dichotomy for u <= 0 with M[u] + c u >= 0.

    The branch is strictly-negative only when the hypothesis holds and the
    mollified u stays below -tol on every window; identically-zero when
    sup|u| <= tol; inconclusive otherwise, with the witness where u_eps is
    closest to zero.
    """
    grid = u.grid
    v = u.values
    if v.max() > tol:
        raise PreconditionError(f"u must be <= tol, max is {v.max():.3g}")
    cv = _values(c, grid)
    defect = _matrix(J, grid, tail_tol) @ v - v + cv * v
    i = int(np.argmin(defect))
    ok = bool(defect[i] >= -tol)
    if not ok and raise_on_violation:
        raise HypothesisViolated(float(grid.x[i]), float(defect[i]))
    ue = mollify(u, eps)
    R = R if R is not None else getattr(grid, "R", grid.measure / 2)
    maxima = np.array([ue.values[w].max() for w in _windows(grid, R)])
    if np.max(np.abs(v)) <= tol:
        return StrongMaxReport(ok, "identically-zero", None, float(defect[i]), maxima, ue)
    if ok and maxima.max() < -tol:
        return StrongMaxReport(ok, "strictly-negative", None, float(defect[i]), maxima, ue)
    witness = float(grid.x[i]) if not ok else float(grid.x[int(np.argmax(ue.values))])
    return StrongMaxReport(ok, "inconclusive", witness, float(defect[i]), maxima, ue)


@dataclass(frozen=True)
class PropagationReport:
    ok: bool
    checked: int
    worst: float

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "worst": self.worst}


def support_propagation_check(J, c, u: GridFunction, eps: float, tol: float = 1e-10, ks=(1, 2),
                              tail_tol: float = 1e-14) -> PropagationReport:
    """Where u_eps vanishes and the hypothesis holds, u must vanish on x - k*supp(J).

    ``worst`` is the largest |u| found on those translated supports; the
    check is vacuous (checked = 0) when u_eps vanishes nowhere.
    """
    rep = strong_max_check(J, c, u, eps, tol, tail_tol=tail_tol)
    grid = u.grid
    if not rep.hypothesis_ok:
        return PropagationReport(True, 0, 0.0)
    zeros = np.flatnonzero(np.abs(rep.u_eps.values) <= tol)
    periodic = isinstance(grid, PeriodicGrid)
    worst, checked = 0.0, 0
    for k in ks:
        lo, hi = support_cover(J, k)
        for i in zeros:
            x = grid.x[i]
            if periodic:
                d = (x - grid.x + grid.R) % grid.period - grid.R   # x - y, wrapped
                # y in x - [lo, hi]  <=>  x - y in [lo, hi]; wrap covers the whole torus once hi - lo >= 2R
                mask = ((d >= lo) & (d <= hi)) | (hi - lo >= grid.period)
            else:
                d = x - grid.x
                mask = (d >= lo) & (d <= hi)
            if mask.any():
                worst = max(worst, float(np.max(np.abs(u.values[mask]))))
                checked += 1
    return PropagationReport(worst <= tol, checked, worst)


PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"


@dataclass(frozen=True)
class Check:
    name: str
    status: str
    margin: float | None = None
    tol: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "margin": self.margin, "tol": self.tol,
                "detail": self.detail}


@dataclass
class SuiteReport:
    scenario: str
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def add(self, name, margin, tol, detail=""):
        """Record a measured deviation; PASS iff margin <= tol."""
        margin = float(margin)
        self.checks.append(Check(name, PASS if margin <= tol else FAIL, margin, tol, detail))

    def skip(self, name, detail):
        self.checks.append(Check(name, SKIPPED, None, None, detail))

    def fail(self, name, detail):
        self.checks.append(Check(name, FAIL, None, None, detail))

    def to_dict(self) -> dict:
        counts = {s: sum(c.status == s for c in self.checks) for s in (PASS, FAIL, SKIPPED)}
        return {"scenario": self.scenario, "ok": self.ok, "counts": counts,
                "checks": [c.to_dict() for c in self.checks]}


def _kernel_checks(rep, sc):
    J, grid, tail_tol = sc.kernel, sc.grid, sc.options["tail_tol"]
    v = validate_kernel(J)
    rep.add("kernel.mass", abs(J.mass - 1.0), 1e-12, f"mass={J.mass:.17g}")
    rep.add("kernel.nonnegative", 0.0 if v.nonnegative else 1.0, 0.0)
    rep.add("kernel.j2", 0.0 if v.j2_ok else 1.0, 0.0, f"witnesses a={v.a}, b={v.b}")
    p, cov = coverage(J, sc.R)
    rep.add("kernel.coverage", -cov, 0.0, f"p={p}, min J_p on (-2R-1, 2R+1) = {cov:.3g}")
    J1, J2, J3 = (convolve_power(J, q) for q in (1, 2, 3))
    rep.add("kernel.power_mass", max(abs(Jq.mass - J.mass ** q) for q, Jq in ((2, J2), (3, J3))), 1e-10)
    cell = J3.dx
    add = max(abs(J3.support[0] - J1.support[0] - J2.support[0]), abs(J3.support[1] - J1.support[1] - J2.support[1]))
    rep.add("kernel.support_additivity", add, cell)
    P = periodize(J, grid, tail_tol)
    rows = grid.h * P.matrix.sum(axis=1)
    rep.add("kernel.periodized_rows", max(abs(rows - 1.0).max(), -P.matrix.min()), 1e-10)
    if J.symmetric:
        x = J2.nodes
        refl = abs(J2(x) - J2(-x)).max()
        rep.add("kernel.symmetry_propagation", max(refl, abs(P.matrix - P.matrix.T).max()), 1e-10)
    else:
        rep.skip("kernel.symmetry_propagation", "kernel not symmetric")


def _operator_checks(rep, sc):
    J, grid, tail_tol = sc.kernel, sc.grid, sc.options["tail_tol"]
    op = assemble_periodic(J, sc.a, grid, tail_tol)
    rep.add("operator.positivity", -op.B.min(), 0.0)
    if grid.N % 4 == 0:
        n = grid.N // 2
        sub = IntervalGrid(-grid.h / 2 + grid.offset, grid.R / 2, n)
        D = dirichlet_convolution_matrix(J, sub)
        i0 = grid.N // 4
        rep.add("operator.dirichlet_domination", (D - op.W[i0:i0 + n, i0:i0 + n]).max(), 1e-15)
    else:
        rep.skip("operator.dirichlet_domination", "N not divisible by 4")
    if J.symmetric:
        M = op.W - np.eye(grid.N)
        sym = abs(M - M.T).max()
        top = np.linalg.eigvalsh(0.5 * (M + M.T)).max() * grid.h
        rep.add("operator.symmetric_form", max(sym, top), 1e-10, "max of quadrature(phi M phi) over |phi|_2 = 1")
    else:
        rep.skip("operator.symmetric_form", "kernel not symmetric")
    return op


def _spectral_checks(rep, sc, op):
    J, a, grid, o = sc.kernel, sc.a, sc.grid, sc.options
    eig = principal_eig_periodic(J, a, grid, o["tol"], o["max_iter"], tail_tol=o["tail_tol"])
    if grid.N <= 1024:
        dense = principal_eig_dense_oracle(op)
        u, v = eig.phi.values, dense.phi.values
        align = abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
        rep.add("spectral.oracle_agreement", max(abs(eig.lambda1 - dense.lambda1), 1 - align), 1e-8)
        rep.add("spectral.simplicity", dense.gap - 1.0 + 1e-15, 0.0, f"gap={dense.gap:.6g}")
    else:
        rep.skip("spectral.oracle_agreement", "N > 1024")
    rng = np.random.default_rng(sc.seed)
    worst = 0.0
    for c in rng.uniform(-5, 5, 3):
        e = principal_eig_periodic(J, a.shifted(c), grid, o["tol"], o["max_iter"], tail_tol=o["tail_tol"])
        worst = max(worst, abs(e.lambda1 - (eig.lambda1 - c)), abs(e.phi.values - eig.phi.values).max())
    rep.add("spectral.shift_covariance", worst, 1e-8)
    av = a(grid.x)
    if J.symmetric:
        lo, hi = -av.max(), -av.mean()
        rep.add("spectral.sandwich", max(lo - eig.lambda1, eig.lambda1 - hi), 1e-8, f"{lo:.6g} <= {eig.lambda1:.6g} <= {hi:.6g}")
        rep.add("spectral.rayleigh", abs(rayleigh_quotient(J, a, eig.phi, o["tail_tol"]) - eig.lambda1), 1e-8)
    else:
        rep.skip("spectral.sandwich", "kernel not symmetric")
        rep.skip("spectral.rayleigh", "kernel not symmetric")
    try:
        pg = aligned_periodic_grid(sc.R, 0.0, 16)
    except InputError:
        rep.skip("spectral.dirichlet_domination", "2R*16 is not an even integer")
    else:
        lam = principal_eig_periodic(J, a, pg, o["tol"]).lambda1
        gaps = [lam - principal_eig_dirichlet(J, a, IntervalGrid.with_spacing(0.0, r * sc.R, 16), o["tol"]).lambda1
                for r in (2, 4)]
        rep.add("spectral.dirichlet_domination", max(gaps), 1e-10)
    b = a.shifted(op.k_shift)
    try:
        cert = kpp_certificate(J, b, grid, tail_tol=o["tail_tol"])
    except CertificateFailed as exc:
        rep.skip("spectral.certificate", f"not constructible at N={grid.N}: {exc}")
    else:
        bound = (cert.sigma ** cert.p + cert.delta) ** (1.0 / cert.p)
        rep.add("spectral.certificate", max(-cert.margin, bound - eig.mu, 0.0) if cert.delta == cert.gamma / 4 else 1.0,
                0.0, f"p={cert.p}, gamma={cert.gamma:.3g}, mu={eig.mu:.12g} >= {bound:.12g}")
    return eig


def _steady_checks(rep, sc, eig):
    J, f, grid, o = sc.kernel, sc.nonlinearity, sc.grid, sc.options
    r = solve_steady(J, f, grid, o["tol"], o["max_iter"], o["margin_tol"], o["decay_tol"], o["tail_tol"], eig=eig)
    if r.classification is Classification.NONTRIVIAL:
        rep.add("steady.positive", -r.p.values.min(), 0.0, f"min p = {r.p.values.min():.6g}")
        rep.add("steady.residual", r.residual, 1e-8)
        down = monotone_run(J, f, GridFunction(grid, np.full(grid.N, f.M_sup)), "down", o["tol"], o["max_iter"],
                            tail_tol=o["tail_tol"]).u
        rep.add("steady.ordering", (r.p.values - down.values).max(), 1e-10)
        if J.symmetric:
            rep.add("steady.uniqueness", r.up_down_gap, o["uniq_tol"])
            worst = -np.inf
            for y in (0.0, 0.5 * sc.R):
                try:
                    cs = compact_subsolution(J, f, y)
                except (SolverError, InputError) as exc:
                    rep.fail("steady.lower_bound", f"compact subsolution at y={y}: {exc}")
                    return
                worst = max(worst, (cs.gamma0 * cs.phi.values - periodic_interp(r.p, cs.phi.grid.x)).max())
            rep.add("steady.lower_bound", worst, 1e-10)
        else:
            rep.skip("steady.uniqueness", "kernel not symmetric")
            rep.skip("steady.lower_bound", "kernel not symmetric")
    elif r.classification is Classification.TRIVIAL:
        rep.add("steady.decay", 0.0 if r.decay_reached else 1.0, 0.0, f"lambda1={r.lambda1:.6g}")
    else:
        rep.skip("steady.decay", "marginal classification")


def _diagnostics_checks(rep, sc, eig):
    J, grid, tol = sc.kernel, sc.grid, 1e-10
    u = eig.phi.like(-eig.phi.values)
    c = sc.a(grid.x) + eig.lambda1
    rm = strong_max_check(J, c, u, 2 * grid.h, 1e-8, tail_tol=sc.options["tail_tol"])
    rz = strong_max_check(J, c, u.like(np.zeros(grid.N)), 2 * grid.h, tol)
    rep.add("diagnostics.strong_max", 0.0 if (rm.branch, rz.branch) == ("strictly-negative", "identically-zero") else 1.0,
            0.0, f"-phi1: {rm.branch}; zero: {rz.branch}")
    pr = support_propagation_check(J, c, u.like(np.zeros(grid.N)), 2 * grid.h, tol)
    rep.add("diagnostics.support_propagation", pr.worst, tol, f"{pr.checked} points checked")


def invariant_suite(sc) -> SuiteReport:
    """Run every module's invariants on one scenario. Solver errors become FAIL entries."""
    rep = SuiteReport(sc.name)
    _kernel_checks(rep, sc)
    try:
        op = _operator_checks(rep, sc)
        eig = _spectral_checks(rep, sc, op)
        _steady_checks(rep, sc, eig)
        _diagnostics_checks(rep, sc, eig)
    except SolverError as exc:
        rep.fail("solver", f"{type(exc).__name__}: {exc}")
    return rep
