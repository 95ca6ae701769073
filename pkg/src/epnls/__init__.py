"""Energy-preserving continuous-stage exponential integrators for the cubic
nonlinear Schrodinger equation i u_t = -(1/eps) u_xx + lam |u|^2 u on a
periodic interval, with a Fourier pseudospectral discretization and
experiment drivers for energy conservation, convergence order, and
long-time near-conservation studies.
"""

from .phifun import phi, phi_diag, phi_series_oracle
from .quadrature import QuadRule, gauss_legendre, midpoint, quad_by_name
from .schemes import (
    Scheme,
    coeff_A,
    coeff_C,
    coeff_dA,
    coeff_dC,
    default_quadrature,
    ep1,
    ep2,
    ep3,
    ep_condition_residuals,
    ep_residual_grid,
    etd2,
    scheme_by_name,
)
from .spectral import (
    FourierState,
    Grid,
    Observables,
    PhysicalState,
    build_grid,
    nonlinearity,
    observables,
    sobolev_norm,
    to_fourier,
    to_physical,
    weighted_action_deviation,
)
from .stepper import (
    SolverConfig,
    StepConvergenceError,
    Stepper,
    StepReport,
    ep1_two_step_residual,
    evolve,
    reference_solution,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "Grid", "FourierState", "PhysicalState", "Observables",
    "build_grid", "to_physical", "to_fourier", "nonlinearity", "observables",
    "sobolev_norm", "weighted_action_deviation",
    "phi", "phi_diag", "phi_series_oracle",
    "QuadRule", "gauss_legendre", "midpoint", "quad_by_name",
    "Scheme", "ep1", "ep2", "ep3", "etd2", "scheme_by_name",
    "coeff_C", "coeff_A", "coeff_dC", "coeff_dA",
    "ep_condition_residuals", "ep_residual_grid", "default_quadrature",
    "SolverConfig", "StepReport", "StepConvergenceError", "Stepper",
    "step", "evolve", "ep1_two_step_residual", "reference_solution",
    "__version__",
]
