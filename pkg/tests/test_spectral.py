import warnings

import numpy as np
import pytest

from conftest import lambda_uniform_cos
from nonlocal_spectra import (
    Coefficient,
    GridFunction,
    IntervalGrid,
    PeriodicGrid,
    assemble_periodic,
    dirichlet_convergence_study,
    kpp_certificate,
    make_kernel,
    principal_eig_dense_oracle,
    principal_eig_dirichlet,
    principal_eig_periodic,
    rayleigh_quotient,
)
from nonlocal_spectra.errors import (
    ComplexPrincipal,
    InputError,
    NoConvergence,
    PreconditionError,
    ReduciblePattern,
    ZeroFunction,
)
from nonlocal_spectra.spectral import (
    NonVariationalWarning,
    aligned_periodic_grid,
    certificate_margin_by_powers,
    _perron,
    smoothstep_bump,
    solve_gamma,
)


@pytest.mark.parametrize("a0", [-1.0, 0.0, 0.7])
def test_constant_coefficient(uniform, grid, a0):
    res = principal_eig_periodic(uniform, Coefficient.constant(a0), grid)
    assert res.lambda1 == pytest.approx(-a0, abs=1e-10)
    assert np.abs(res.phi.values - 1.0).max() < 1e-10


def test_cosine_value(uniform, grid, cos_a):
    res = principal_eig_periodic(uniform, cos_a, grid)
    assert -1.0 <= res.lambda1 <= 0.0
    assert res.lambda1 == pytest.approx(lambda_uniform_cos(0.0, 1.0), abs=1e-10)
    assert res.lambda1 == pytest.approx(1 - np.sqrt(2), abs=1e-10)
    dense = principal_eig_dense_oracle(assemble_periodic(uniform, cos_a, grid))
    assert dense.lambda1 == pytest.approx(res.lambda1, abs=1e-10)
    assert dense.gap < 1


def test_resolution_independence(uniform, cos_a):
    l256 = principal_eig_periodic(uniform, cos_a, PeriodicGrid(1.0, 256)).lambda1
    l512 = principal_eig_periodic(uniform, cos_a, PeriodicGrid(1.0, 512)).lambda1
    assert abs(l256 - l512) < 1e-6


@pytest.mark.parametrize("method", ["noda", "power"])
def test_methods_agree_asymmetric(tent, method):
    g = PeriodicGrid(1.0, 128)
    a = Coefficient(0.1, (0.4, -0.2), (0.3,))
    res = principal_eig_periodic(tent, a, g, method=method)
    dense = principal_eig_dense_oracle(assemble_periodic(tent, a, g))
    assert res.lambda1 == pytest.approx(dense.lambda1, abs=1e-9)
    assert res.method == method and res.residual < 1e-9


def test_phi_normalisation(gaussian):
    g = PeriodicGrid(2.0, 128)
    res = principal_eig_periodic(gaussian, Coefficient(0.0, (0.5,), R=2.0), g)
    assert g.h * np.sum(res.phi.values ** 2) == pytest.approx(4.0)
    assert res.phi.values.min() > 0


def test_dense_oracle_2x2():
    res = principal_eig_dense_oracle(np.array([[0.0, 1.0], [1.0, 0.0]]) + 2.0 * np.eye(2))
    assert res.mu == pytest.approx(3.0)
    assert res.phi == pytest.approx(np.full(2, 1 / np.sqrt(2)))


def test_dense_oracle_complex():
    # eigenvalues 1 +- 2i: the leading real part belongs to a complex pair
    with pytest.raises(ComplexPrincipal):
        principal_eig_dense_oracle(np.array([[1.0, -2.0], [2.0, 1.0]]))


def test_reducible_pattern():
    # a zero row keeps the first entry at zero, so the iterate never enters the open cone
    B = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    with pytest.raises(ReduciblePattern):
        _perron(B, 1.0, 1e-10, 10, "noda", 2)


def test_no_convergence(uniform, grid, cos_a):
    with pytest.raises(NoConvergence):
        principal_eig_periodic(uniform, cos_a, grid, method="power", max_iter=3)


def test_tol_floor(uniform, grid, cos_a):
    with pytest.raises(InputError):
        principal_eig_periodic(uniform, cos_a, grid, tol=1e-15)


def test_dirichlet_zero_coefficient_positive(uniform):
    res = principal_eig_dirichlet(uniform, Coefficient.constant(0.0), IntervalGrid(0.0, 2.0, 64))
    assert res.lambda1 > 0
    dense = principal_eig_dense_oracle(assemble_dirichlet_op(uniform, IntervalGrid(0.0, 2.0, 64)))
    assert dense.lambda1 == pytest.approx(res.lambda1, abs=1e-10)
    assert IntervalGrid(0.0, 2.0, 64).h * np.sum(res.phi.values ** 2) == pytest.approx(1.0)


def assemble_dirichlet_op(J, g):
    from nonlocal_spectra import assemble_dirichlet
    return assemble_dirichlet(J, Coefficient.constant(0.0), g)


def test_dirichlet_constant_limit(uniform):
    lams = [principal_eig_dirichlet(uniform, Coefficient.constant(0.4), IntervalGrid.with_spacing(0.0, r, 8)).lambda1
            for r in (2, 8, 32)]
    assert lams[0] > lams[1] > lams[2] > -0.4
    assert lams[2] + 0.4 < 0.01


def test_dirichlet_translation(uniform, cos_a):
    l0 = principal_eig_dirichlet(uniform, cos_a, IntervalGrid.with_spacing(0.3, 4.0, 8)).lambda1
    l1 = principal_eig_dirichlet(uniform, cos_a, IntervalGrid.with_spacing(2.3, 4.0, 8)).lambda1
    assert abs(l0 - l1) < 1e-10


def test_rayleigh(uniform, grid, cos_a):
    res = principal_eig_periodic(uniform, cos_a, grid)
    assert rayleigh_quotient(uniform, cos_a, res.phi) == pytest.approx(res.lambda1, abs=1e-10)
    rng = np.random.default_rng(3)
    for _ in range(10):
        phi = GridFunction(grid, rng.standard_normal(grid.N))
        assert rayleigh_quotient(uniform, cos_a, phi) >= res.lambda1 - 1e-10


def test_rayleigh_errors(tent, grid, cos_a):
    with pytest.raises(ZeroFunction):
        rayleigh_quotient(tent, cos_a, GridFunction(grid, np.zeros(grid.N)))
    with pytest.warns(NonVariationalWarning):
        rayleigh_quotient(tent, cos_a, GridFunction(grid, np.ones(grid.N)))


def test_convergence_study(uniform, cos_a):
    t = dirichlet_convergence_study(uniform, cos_a, 0.0, [4, 8, 16, 32], N_per_unit=8)
    gaps = t.gaps
    assert np.all(gaps >= -1e-10)
    assert np.all(np.diff(gaps) < 0)
    t2 = dirichlet_convergence_study(uniform, cos_a, 2.0, [4, 8, 16, 32], N_per_unit=8)
    assert np.abs(np.array(t.lambdas) - np.array(t2.lambdas)).max() < 1e-10


def test_convergence_study_preconditions(tent, uniform, cos_a):
    with pytest.raises(PreconditionError):
        dirichlet_convergence_study(tent, cos_a, 0.0, [4, 8])
    with pytest.raises(InputError):
        dirichlet_convergence_study(uniform, cos_a, 0.0, [8, 4])


def test_aligned_grid_matches_interval_nodes():
    g = aligned_periodic_grid(1.0, 0.3, 8)
    iv = IntervalGrid.with_spacing(0.3, 4.0, 8)
    d = (iv.x[:, None] - g.x[None, :] + 1.0) % 2.0 - 1.0
    assert np.abs(d).min(axis=1).max() < 1e-12


def test_smoothstep():
    d = np.array([0.0, 0.1, 0.15, 0.2, 0.3])
    v = smoothstep_bump(d, 0.1)
    assert v[0] == v[1] == 1.0 and v[3] == v[4] == 0.0
    assert v[2] == pytest.approx(0.5)


def test_solve_gamma_closed_form():
    # (2c/k) log(1 + k eps / gamma) = 3/2  <=>  gamma = k eps / expm1(3k / 4c)
    c, k, eps = 0.5, 3.0, 0.25
    assert solve_gamma(c, k, eps) == pytest.approx(k * eps / np.expm1(3 * k / (4 * c)), rel=1e-12)
    assert solve_gamma(c, 0.0, eps) == pytest.approx(4 * c * eps / 3)
    g = solve_gamma(c, k, eps)
    assert 2 * c / k * np.log1p(k * eps / g) - 1 > 0.5


def test_certificate_cosine_b(uniform):
    g = PeriodicGrid(1.0, 512)
    b = Coefficient(2.0, (1.0,))
    cert = kpp_certificate(uniform, b, g)
    assert cert.p == 3 and cert.margin >= 0
    assert cert.delta == cert.gamma / 4
    assert cert.x0 == 0.0 and cert.sigma == 3.0
    v = cert.v.values
    dist = np.abs(g.x - cert.x0)
    assert v.min() >= 0 and np.all(v[dist >= 2 * cert.epsilon] == 0)
    assert certificate_margin_by_powers(uniform, b, cert) >= 0


def test_certificate_constant_b(uniform):
    g = PeriodicGrid(1.0, 128)
    cert = kpp_certificate(uniform, Coefficient.constant(1.5), g)
    assert cert.k == 0 and cert.margin >= 0
    assert cert.gamma == pytest.approx(4 * cert.c * cert.epsilon / 3)


def test_certificate_requires_positive_b(uniform):
    with pytest.raises(PreconditionError):
        kpp_certificate(uniform, Coefficient(0.0, (1.0,)), PeriodicGrid(1.0, 64))


def test_rayleigh_tiny_amplitude(uniform, grid, cos_a):
    phi = principal_eig_periodic(uniform, cos_a, grid).phi
    q = rayleigh_quotient(uniform, cos_a, phi.like(1e-200 * phi.values))
    assert q == pytest.approx(1 - np.sqrt(2), abs=1e-12)
