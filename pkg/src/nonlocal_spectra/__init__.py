"""Principal eigenvalues and KPP steady states for the nonlocal operator M[u] = J*u - u
with periodic coefficients."""
from ._backend import NAME as BACKEND
from .errors import InputError, NonlocalSpectraError, SolverError
from .field import Coefficient, GridFunction, IntervalGrid, PeriodicGrid, gamma_star, mollify, quadrature
from .kernel import (
    Kernel,
    convolve_power,
    make_kernel,
    min_power_for_coverage,
    periodize,
    support_cover,
    validate_kernel,
)
from .operator import apply, assemble_dirichlet, assemble_periodic, residual
from .spectral import (
    dirichlet_convergence_study,
    kpp_certificate,
    principal_eig_dense_oracle,
    principal_eig_dirichlet,
    principal_eig_periodic,
    rayleigh_quotient,
)
from .steady import (
    Classification,
    classify_existence,
    compact_subsolution,
    from_callable,
    from_samples,
    kpp,
    make_nonlinearity,
    monotone_iterate,
    solve_steady,
    subsolution_scale,
    sweep_delta,
    uniqueness_probe,
)
from .diagnostics import invariant_suite, strong_max_check

__version__ = "0.1.0"
