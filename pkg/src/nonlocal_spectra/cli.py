"""Command line interface: ``nonlocal-spectra <command> <scenario> [flags]``.

Exit codes: 0 success, 1 solver error, 2 invariant FAIL, 3 bad input.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import _backend
from .diagnostics import invariant_suite, strong_max_check
from .errors import BadScenario, InputError, SolverError
from .field import GridFunction, fmt, write_columns
from .kernel import validate_kernel
from .operator import assemble_periodic
from .scenario import load
from .spectral import (
    dirichlet_convergence_study,
    kpp_certificate,
    principal_eig_dense_oracle,
    principal_eig_dirichlet,
    principal_eig_periodic,
    rayleigh_quotient,
)
from .steady import sweep_delta, solve_steady, subsolution_scale, uniqueness_probe

EXIT_OK, EXIT_SOLVER, EXIT_FAIL, EXIT_INPUT = 0, 1, 2, 3
COMMANDS = ("validate", "eig-periodic", "eig-dirichlet", "rayleigh", "certificate", "converge",
            "solve", "sweep", "unique", "maxprinciple", "verify")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


def emit(summary: dict, fmt_: str, stream=None):
    stream = stream or sys.stdout
    if fmt_ == "csv":
        flat = {k: v for k, v in summary.items() if not isinstance(v, (dict, list))}
        buf = io.StringIO()
        buf.write(",".join(flat) + "\n")
        buf.write(",".join("" if v is None else fmt(v) for v in flat.values()) + "\n")
        stream.write(buf.getvalue())
    else:
        stream.write(json.dumps(summary, indent=2, default=_jsonable) + "\n")


def _out(args) -> Path | None:
    if args.out is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _threads(args) -> int:
    env = os.environ.get("NONLOCAL_SPECTRA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"NONLOCAL_SPECTRA_THREADS must be an integer, got {env!r}") from exc
    return max(1, args.threads)


def _scenario(args):
    sc = load(args.scenario)
    if args.grid is not None:
        if args.grid < 8 or args.grid % 2:
            raise BadScenario("/N", f"--grid must be an even integer >= 8, got {args.grid}")
        sc = sc.with_grid(args.grid)
    if args.tol is not None:
        sc.options["tol"] = args.tol
    return sc


def _eig_summary(res, gap=None) -> dict:
    d = res.to_dict()
    return {"lambda1": d["lambda1"], "mu": d["mu"], "residual": d["residual"],
            "iterations": d["iterations"], "gap": gap if gap is not None else d["gap"]}


def cmd_validate(sc, args):
    rep = validate_kernel(sc.kernel)
    summary = {"scenario": sc.name, "ok": rep.ok, "kernel": rep.to_dict(),
               "nonlinearity": sc.nonlinearity.to_dict(), "grid": {"R": sc.R, "N": sc.N}}
    return summary, EXIT_OK if rep.ok else EXIT_FAIL


def cmd_eig_periodic(sc, args):
    o = sc.options
    res = principal_eig_periodic(sc.kernel, sc.a, sc.grid, o["tol"], o["max_iter"], tail_tol=o["tail_tol"])
    gap = None
    if sc.N <= 1024:
        gap = principal_eig_dense_oracle(assemble_periodic(sc.kernel, sc.a, sc.grid, o["tail_tol"])).gap
    if (out := _out(args)):
        res.to_csv(out / "phi_periodic.csv")
    return _eig_summary(res, gap), EXIT_OK


def cmd_eig_dirichlet(sc, args):
    o = sc.options
    grid = sc.interval_grid()
    res = principal_eig_dirichlet(sc.kernel, sc.a, grid, o["tol"], o["max_iter"])
    if (out := _out(args)):
        res.to_csv(out / "phi_dirichlet.csv")
    summary = _eig_summary(res)
    phi = res.phi.values
    # continuity at the truncation edge is not testable on a grid; report the edge values instead
    summary.update(y=grid.y, r=grid.r, N=grid.N, phi_left=float(phi[0]), phi_right=float(phi[-1]))
    return summary, EXIT_OK


def cmd_rayleigh(sc, args):
    o = sc.options
    res = principal_eig_periodic(sc.kernel, sc.a, sc.grid, o["tol"], o["max_iter"], tail_tol=o["tail_tol"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        q_phi = rayleigh_quotient(sc.kernel, sc.a, res.phi, o["tail_tol"])
        q_one = rayleigh_quotient(sc.kernel, sc.a, res.phi.like(np.ones(sc.N)), o["tail_tol"])
    for w in caught[:1]:
        print(f"warning: {w.message}", file=sys.stderr)
    return {"lambda1": res.lambda1, "rayleigh_phi1": q_phi, "rayleigh_constant": q_one,
            "symmetric": sc.kernel.symmetric}, EXIT_OK


def cmd_certificate(sc, args):
    o = sc.options
    op = assemble_periodic(sc.kernel, sc.a, sc.grid, o["tail_tol"])
    b = sc.a.shifted(op.k_shift)
    cert = kpp_certificate(sc.kernel, b, sc.grid, tail_tol=o["tail_tol"])
    eig = principal_eig_periodic(sc.kernel, sc.a, sc.grid, o["tol"], o["max_iter"], tail_tol=o["tail_tol"])
    bound = (cert.sigma ** cert.p + cert.delta) ** (1.0 / cert.p)
    summary = cert.to_dict()
    summary.update(k_shift=op.k_shift, mu=eig.mu, mu_bound=bound, consistent=bool(eig.mu >= bound))
    if (out := _out(args)):
        cert.v.to_csv(out / "certificate_v.csv", header=("x", "v"))
    return summary, EXIT_OK if summary["consistent"] else EXIT_FAIL


def cmd_converge(sc, args):
    o = sc.options
    d = sc.dirichlet
    radii = d.get("radii", [2 * sc.R, 4 * sc.R, 8 * sc.R])
    table = dirichlet_convergence_study(sc.kernel, sc.a, float(d.get("y", 0.0)), radii,
                                        int(d.get("N_per_unit", 16)), o["tol"], o["max_iter"])
    if (out := _out(args)):
        table.to_csv(out / "converge.csv")
    return table.to_dict(), EXIT_OK


def cmd_solve(sc, args):
    o = sc.options
    rep = solve_steady(sc.kernel, sc.nonlinearity, sc.grid, o["tol"], o["max_iter"], o["margin_tol"],
                       o["decay_tol"], o["tail_tol"])
    if (out := _out(args)):
        if rep.p is not None:
            rep.p.to_csv(out / "p.csv", header=("x", "p"))
        write_columns(out / "trace.csv", ("iteration", "step"), [np.arange(1, rep.trace.size + 1), rep.trace])
    return rep.to_dict(), EXIT_OK


def sweep_values(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise InputError(f"--step must be positive, got {step}")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(max(n, 0))]


def cmd_sweep(sc, args):
    if args.param != "delta":
        raise InputError(f"only --param delta is supported, got {args.param!r}")
    o = sc.options
    deltas = sweep_values(args.start, args.stop, args.step)
    rows = sweep_delta(sc.kernel, sc.a, sc.grid, deltas, o["margin_tol"], o["tol"], o["max_iter"],
                       solve=not args.no_solve, threads=_threads(args), tail_tol=o["tail_tol"])
    cls = [r.classification.value for r in rows]
    flips = [rows[i + 1].delta for i in range(len(rows) - 1) if cls[i] != cls[i + 1]]
    if (out := _out(args)):
        write_columns(out / "sweep.csv", ("delta", "lambda1", "classification", "min_p"),
                      [[r.delta for r in rows], [r.lambda1 for r in rows], cls,
                       ["" if r.min_p is None else r.min_p for r in rows]])
    summary = {"param": "delta", "points": len(rows), "flips": flips,
               "rows": [{"delta": r.delta, "lambda1": r.lambda1, "classification": c, "min_p": r.min_p}
                        for r, c in zip(rows, cls)]}
    if args.format == "csv":
        buf = io.StringIO()
        write_columns_stream(buf, ("delta", "lambda1", "classification", "min_p"),
                             [[r.delta, r.lambda1, c, "" if r.min_p is None else r.min_p] for r, c in zip(rows, cls)])
        sys.stdout.write(buf.getvalue())
        return None, EXIT_OK
    return summary, EXIT_OK


def write_columns_stream(stream, header, rows):
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def cmd_unique(sc, args):
    o = sc.options
    J, f, grid = sc.kernel, sc.nonlinearity, sc.grid
    eig = principal_eig_periodic(J, f.a, grid, o["tol"], o["max_iter"], tail_tol=o["tail_tol"])
    eps = subsolution_scale(J, f, eig.phi, o["tail_tol"])
    inits = [eig.phi.like(eps * eig.phi.values),
             GridFunction(grid, np.full(grid.N, f.M_sup)),
             GridFunction(grid, np.full(grid.N, 3 * f.M_sup))]
    rep = uniqueness_probe(J, f, grid, inits, o["tol"], o["max_iter"], o["uniq_tol"], o["tail_tol"])
    summary = rep.to_dict()
    summary["eps"] = eps
    return summary, EXIT_OK if rep.passed else EXIT_FAIL


def cmd_maxprinciple(sc, args):
    """Default input u = -phi_1, c = a + lambda_1, for which M[u] + c u = 0."""
    o = sc.options
    eig = principal_eig_periodic(sc.kernel, sc.a, sc.grid, o["tol"], o["max_iter"], tail_tol=o["tail_tol"])
    eps = args.eps if args.eps is not None else 2 * sc.grid.h
    rep = strong_max_check(sc.kernel, sc.a(sc.grid.x) + eig.lambda1, eig.phi.like(-eig.phi.values), eps,
                           args.smp_tol, tail_tol=o["tail_tol"])
    if (out := _out(args)):
        rep.u_eps.to_csv(out / "u_eps.csv", header=("x", "u_eps"))
    summary = rep.to_dict()
    summary["eps"] = eps
    return summary, EXIT_OK


def cmd_verify(sc, args):
    rep = invariant_suite(sc)
    return rep.to_dict(), EXIT_OK if rep.ok else EXIT_FAIL


HELP = {
    "validate": "check a scenario against the schema",
    "eig-periodic": "principal eigenpair of the periodic problem",
    "eig-dirichlet": "principal eigenpair on the truncated interval",
    "rayleigh": "Rayleigh quotient check (symmetric kernels)",
    "certificate": "positivity certificate for L + b",
    "converge": "Dirichlet eigenvalues over growing radii",
    "solve": "classify and compute the periodic steady state",
    "sweep": "classification over a range of constant shifts of a",
    "unique": "steady limits from several initial data",
    "maxprinciple": "strong maximum principle branch for u = -phi_1",
    "verify": "run every invariant check; exit 2 on failure",
}

HANDLERS = {"validate": cmd_validate, "eig-periodic": cmd_eig_periodic, "eig-dirichlet": cmd_eig_dirichlet,
            "rayleigh": cmd_rayleigh, "certificate": cmd_certificate, "converge": cmd_converge,
            "solve": cmd_solve, "sweep": cmd_sweep, "unique": cmd_unique, "maxprinciple": cmd_maxprinciple,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    common.add_argument("--out", metavar="DIR", help="directory for CSV artifacts")
    common.add_argument("--grid", metavar="N", type=int, help="override the periodic grid size")
    common.add_argument("--tol", metavar="X", type=float, help="override the solver tolerance")
    common.add_argument("--threads", metavar="K", type=int, default=1,
                        help="worker threads for sweeps (NONLOCAL_SPECTRA_THREADS overrides)")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="stdout summary format")
    parser = argparse.ArgumentParser(prog="nonlocal-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s ({_backend.NAME} core)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=HELP[name])
        if name == "sweep":
            p.add_argument("--param", default="delta", help="swept parameter (delta: a -> a + delta)")
            p.add_argument("--from", dest="start", type=float, default=-1.5, help="first value (default -1.5)")
            p.add_argument("--to", dest="stop", type=float, default=1.5, help="last value (default 1.5)")
            p.add_argument("--step", type=float, default=0.1, help="increment (default 0.1)")
            p.add_argument("--no-solve", action="store_true", help="skip steady solves (no min_p column)")
        if name == "maxprinciple":
            p.add_argument("--eps", type=float, help="mollifier radius (default 2h)")
            p.add_argument("--smp-tol", type=float, default=1e-8, help="tolerance of the dichotomy test")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        sc = _scenario(args)
        summary, code = HANDLERS[args.command](sc, args)
    except BadScenario as exc:
        emit({"error": "BadScenario", "pointer": exc.pointer, "message": str(exc)}, "json", sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        emit({"error": type(exc).__name__, "message": str(exc)}, "json", sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        emit({"error": type(exc).__name__, "message": str(exc)}, "json", sys.stderr)
        return EXIT_SOLVER
    if summary is not None:
        emit(summary, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
