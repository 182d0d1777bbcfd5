import json

import numpy as np
import pytest

from nonlocal_spectra import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, invariant_suite, strong_max_check
from nonlocal_spectra.diagnostics import BRANCHES, support_propagation_check
from nonlocal_spectra.errors import HypothesisViolated, PreconditionError
from nonlocal_spectra.scenario import bundled, load
from nonlocal_spectra.spectral import principal_eig_periodic

DATA = __import__("pathlib").Path(__file__).parent / "data"


def test_zero_is_identically_zero(uniform, grid):
    rep = strong_max_check(uniform, 0.3, GridFunction(grid, np.zeros(grid.N)), 0.1)
    assert rep.branch == "identically-zero" and rep.hypothesis_ok


def test_minus_one_is_strictly_negative(uniform, grid):
    rep = strong_max_check(uniform, 0.0, GridFunction(grid, -np.ones(grid.N)), 0.1)
    assert rep.hypothesis_ok and rep.branch == "strictly-negative"


def test_touching_zero_violates_hypothesis(uniform, grid):
    u = GridFunction(grid, -(1 + np.cos(np.pi * grid.x)))
    # oracle: J*cos(pi x) = 0, so M[u] = cos(pi x), negative near the zero set x = +-1
    W_u = np.cos(np.pi * grid.x)
    rep = strong_max_check(uniform, 0.0, u, 0.1)
    assert not rep.hypothesis_ok and rep.branch == "inconclusive"
    assert rep.defect_min == pytest.approx(W_u.min(), abs=1e-10)
    assert abs(abs(rep.witness) - 1.0) < 1e-12
    with pytest.raises(HypothesisViolated):
        strong_max_check(uniform, 0.0, u, 0.1, raise_on_violation=True)


def test_positive_input_rejected(uniform, grid):
    with pytest.raises(PreconditionError):
        strong_max_check(uniform, 0.0, GridFunction(grid, np.ones(grid.N)), 0.1)


def test_eigenfunction_branch(uniform, grid):
    a = Coefficient(0.5, (1.0,))
    eig = principal_eig_periodic(uniform, a, grid)
    rep = strong_max_check(uniform, a(grid.x) + eig.lambda1, eig.phi.like(-eig.phi.values), 2 * grid.h, 1e-8)
    assert rep.branch == "strictly-negative"


def test_interval_windows(uniform):
    g = IntervalGrid(0.0, 3.0, 96)
    rep = strong_max_check(uniform, 0.0, GridFunction(g, np.zeros(96)), 0.2, R=1.0)
    assert rep.branch in BRANCHES and rep.window_maxima.size > 1


def test_support_propagation_zero(uniform, grid):
    rep = support_propagation_check(uniform, 0.0, GridFunction(grid, np.zeros(grid.N)), 0.1)
    assert rep.ok and rep.checked == 2 * grid.N and rep.worst == 0.0


def test_support_propagation_vacuous(uniform, grid):
    rep = support_propagation_check(uniform, 0.0, GridFunction(grid, -np.ones(grid.N)), 0.1)
    assert rep.ok and rep.checked == 0


@pytest.mark.parametrize("name", sorted(bundled()))
def test_suite_bundled(name):
    rep = invariant_suite(load(name))
    failed = [c for c in rep.checks if c.status == "FAIL"]
    assert rep.ok, failed
    json.dumps(rep.to_dict())


def test_suite_asymmetric_skips():
    rep = invariant_suite(load("asymmetric_tent"))
    skipped = {c.name for c in rep.checks if c.status == "SKIPPED"}
    assert {"spectral.sandwich", "spectral.rayleigh", "steady.uniqueness", "operator.symmetric_form"} <= skipped
    assert rep.ok


def test_suite_broken_mass():
    rep = invariant_suite(load(DATA / "broken_mass.json"))
    assert not rep.ok
    mass = next(c for c in rep.checks if c.name == "kernel.mass")
    assert mass.status == "FAIL" and mass.margin == pytest.approx(0.1, abs=1e-12)
