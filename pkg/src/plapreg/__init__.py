"""Desk-scale numerical lab for regularized p-Laplace minimization.

Submodules:

* :mod:`plapreg.fields` - grids, scalar/vector fields, interior masks,
  finite difference calculus, CSV/JSON serialization.
* :mod:`plapreg.pointwise` - the regularized length, energy density and
  its derivatives, the power transforms, and algebraic certificates.
* :mod:`plapreg.solver` - damped Newton minimization of the discrete
  energy with eps continuation.
* :mod:`plapreg.smoothness` - Nikol'skii and Sobolev seminorms, shift
  difference quotients, log-log exponent fits.
* :mod:`plapreg.experiments` - the exact torsion-type oracle, exponent
  table verification, eps sweeps and scaling checks.
* :mod:`plapreg.cli` - the ``plapreg`` command line front end.
"""

from .fields import (
    Grid,
    InteriorMask,
    ScalarField,
    VectorField,
    adjointness_defect,
    divergence,
    gradient,
    interior_mask,
    read_field_csv,
    read_grid_json,
    write_field_csv,
    write_grid_json,
)
from .pointwise import (
    PLapParams,
    L_eps,
    alpha_s,
    beta_theta,
    coercivity_constant,
    grad_L_eps,
    hess_L_eps,
    integrand_lower_bound_check,
    l_eps,
    monotonicity_gap,
)
from .solver import (
    ProblemSpec,
    SolveResult,
    SolverError,
    el_residual,
    energy,
    energy_and_gradient,
    energy_upper_bound,
    solve,
)
from .smoothness import (
    SeminormReport,
    composition_bound_check,
    dyadic_shifts,
    fit_smoothness_exponent,
    lq_norm,
    nikolskii_seminorm,
    shift_difference_norm,
    sobolev_w12_norm,
    sobolev_w12_seminorm,
    sobolev_w1p_norm,
)
from .experiments import (
    ScalingReport,
    SharpnessOracle,
    SweepResult,
    Theorem1Report,
    oracle_fields,
    oracle_problem,
    run_eps_sweep,
    run_scaling_check,
    run_theorem1_check,
    table_exponent,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "InteriorMask",
    "ScalarField",
    "VectorField",
    "adjointness_defect",
    "divergence",
    "gradient",
    "interior_mask",
    "read_field_csv",
    "read_grid_json",
    "write_field_csv",
    "write_grid_json",
    "PLapParams",
    "L_eps",
    "alpha_s",
    "beta_theta",
    "coercivity_constant",
    "grad_L_eps",
    "hess_L_eps",
    "integrand_lower_bound_check",
    "l_eps",
    "monotonicity_gap",
    "ProblemSpec",
    "SolveResult",
    "SolverError",
    "el_residual",
    "energy",
    "energy_and_gradient",
    "energy_upper_bound",
    "solve",
    "SeminormReport",
    "composition_bound_check",
    "dyadic_shifts",
    "fit_smoothness_exponent",
    "lq_norm",
    "nikolskii_seminorm",
    "shift_difference_norm",
    "sobolev_w12_norm",
    "sobolev_w12_seminorm",
    "sobolev_w1p_norm",
    "ScalingReport",
    "SharpnessOracle",
    "SweepResult",
    "Theorem1Report",
    "oracle_fields",
    "oracle_problem",
    "run_eps_sweep",
    "run_scaling_check",
    "run_theorem1_check",
    "table_exponent",
    "__version__",
]
