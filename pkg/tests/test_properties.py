"""Property tests of the invariants listed for each module."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nonlocal_spectra import (
    Coefficient,
    GridFunction,
    PeriodicGrid,
    assemble_periodic,
    convolve_power,
    gamma_star,
    make_kernel,
    mollify,
    periodize,
    principal_eig_dense_oracle,
    principal_eig_periodic,
    quadrature,
    rayleigh_quotient,
)

G32 = PeriodicGrid(1.0, 32)
G64 = PeriodicGrid(1.0, 64)
finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, 32, elements=finite)

kernels = st.one_of(
    st.builds(lambda l: make_kernel("uniform", halfwidth=l), st.floats(0.3, 1.5)),
    st.builds(lambda l, s: make_kernel("tent", halfwidth=l, shift=s * l), st.floats(0.4, 1.5), st.floats(-0.8, 0.8)),
    st.builds(lambda s: make_kernel("truncated-gaussian", stddev=s), st.floats(0.1, 0.4)),
)
symmetric_kernels = st.one_of(
    st.builds(lambda l: make_kernel("uniform", halfwidth=l), st.floats(0.3, 1.5)),
    st.builds(lambda s: make_kernel("truncated-gaussian", stddev=s), st.floats(0.1, 0.4)),
)
coefficients = st.builds(
    lambda m, c, s: Coefficient(m, tuple(c), tuple(s)),
    st.floats(-2, 2), st.lists(st.floats(-1, 1), max_size=3), st.lists(st.floats(-1, 1), max_size=3))


@given(vectors, vectors, finite)
def test_quadrature_linear(u, v, c):
    lhs = quadrature(GridFunction(G32, u + c * v))
    rhs = quadrature(GridFunction(G32, u)) + c * quadrature(GridFunction(G32, v))
    assert lhs == pytest.approx(rhs, abs=1e-11)


@given(finite)
def test_quadrature_constants(c):
    assert quadrature(GridFunction(G32, np.full(32, c))) == pytest.approx(2 * c, abs=1e-13)


@given(vectors, finite, st.floats(0.07, 0.9))
def test_mollify_commutes_with_constants(u, c, eps):
    a = mollify(GridFunction(G32, u + c), eps).values
    b = mollify(GridFunction(G32, u), eps).values + c
    assert np.abs(a - b).max() < 1e-12


def test_mollify_eps_h_second_order():
    errs = []
    for n in (64, 128, 256):
        g = PeriodicGrid(1.0, n)
        u = GridFunction(g, np.sin(np.pi * g.x) + 0.3 * np.cos(2 * np.pi * g.x))
        errs.append(np.abs(mollify(u, g.h).values - u.values).max())
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


@given(vectors, arrays(np.float64, 32, elements=st.floats(0.1, 3)))
def test_gamma_star_tight(u, v):
    gu, gv = GridFunction(G32, u), GridFunction(G32, v)
    g = gamma_star(gu, gv)
    d = g * v - u
    assert d.min() >= -1e-14 and abs(d.min()) <= 1e-14 * max(1.0, np.abs(u).max())


@given(kernels, st.integers(1, 2), st.integers(1, 2))
def test_power_support_additive(J, p, q):
    a, b, c = convolve_power(J, p), convolve_power(J, q), convolve_power(J, p + q)
    cell = c.dx
    assert abs(c.support[0] - a.support[0] - b.support[0]) <= cell
    assert abs(c.support[1] - a.support[1] - b.support[1]) <= cell
    assert c.mass == pytest.approx(1.0, abs=1e-10) and c.samples.min() >= 0


@given(symmetric_kernels)
def test_symmetry_propagates(J):
    J2 = convolve_power(J, 2)
    x = J2.nodes
    assert np.abs(J2(x) - J2(-x)).max() < 1e-10
    P = periodize(J, G64).matrix
    assert np.abs(P - P.T).max() < 1e-10


@given(kernels)
def test_periodized_rows_unit(J):
    P = periodize(J, G64)
    assert P.matrix.min() >= 0
    assert np.abs(G64.h * P.matrix.sum(axis=1) - 1).max() < 1e-10


@given(symmetric_kernels, vectors)
def test_symmetric_form_nonpositive(J, phi):
    op = assemble_periodic(J, Coefficient.constant(0.0), G32)
    M = op.A
    assert np.abs(M - M.T).max() < 1e-10
    assert G32.h * phi @ (M @ phi) <= 1e-10


@given(kernels, coefficients, arrays(np.float64, 32, elements=st.floats(0, 3)))
def test_shifted_operator_positive(J, a, u):
    op = assemble_periodic(J, a, G32)
    assert (op.B @ u).min() >= -1e-14 * max(1.0, u.max())


@given(kernels, coefficients)
def test_oracle_agreement(J, a):
    res = principal_eig_periodic(J, a, G64)
    dense = principal_eig_dense_oracle(assemble_periodic(J, a, G64))
    assert res.lambda1 == pytest.approx(dense.lambda1, abs=1e-8)
    u, v = res.phi.values, dense.phi.values
    assert abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)) >= 1 - 1e-8
    assert dense.gap < 1


@given(kernels, coefficients, st.floats(-5, 5))
def test_shift_covariance(J, a, c):
    r0 = principal_eig_periodic(J, a, G64)
    r1 = principal_eig_periodic(J, a.shifted(c), G64)
    assert r1.lambda1 == pytest.approx(r0.lambda1 - c, abs=1e-8)
    assert np.abs(r1.phi.values - r0.phi.values).max() < 1e-8


@given(symmetric_kernels, coefficients)
def test_sandwich(J, a):
    lam = principal_eig_periodic(J, a, G64).lambda1
    av = a(G64.x)
    assert -av.max() - 1e-8 <= lam <= -av.mean() + 1e-8


@given(symmetric_kernels, coefficients, vectors)
def test_rayleigh_above_lambda(J, a, phi):
    if not np.any(phi):
        phi = np.ones(32)
    lam = principal_eig_periodic(J, a, G32).lambda1
    assert rayleigh_quotient(J, a, GridFunction(G32, phi)) >= lam - 1e-10
