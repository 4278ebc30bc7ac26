"""Numerical laboratory for the deformed Hermitian-Yang-Mills equation.

Solves ``sum_i arctan(lambda_i) = h`` on periodic almost Hermitian tori,
where ``lambda_i`` are the eigenvalues of ``omega + ddbar u`` relative to
the metric ``chi``.
"""
from .analytic import AnalyticPotential
from .continuation import ContinuityState, PathOptions, continuity_path, read_checkpoints, write_checkpoint
from .errors import (
    DegenerateArgumentError,
    DHYMError,
    DomainError,
    LinearSolveError,
    NonConvergenceError,
    PathError,
    StateError,
    StepError,
)
from .geometry import (
    AlmostHermitianStructure,
    BackgroundForm,
    HermitianMatrixField,
    build_structure,
    complex_hessian,
    load_structure,
    omega_u,
    save_structure,
    tabulated_structure,
    validate_structure,
)
from .grid import GridSpec, ScalarField, diff, mean, mixed_diff, real_hessian_eigen_max
from .monitors import (
    EstimateSnapshot,
    check_concavity_at_state,
    check_eigenvalue_inequalities,
    snapshot,
    track_path,
)
from .phase import (
    HatTheta,
    PhaseCones,
    cone_membership,
    hat_theta,
    hessian_coeffs,
    linearization_coeffs,
    phase,
    phase_properties_check,
    relative_eigenvalues,
)
from .solver import (
    Linearization,
    SolveOptions,
    apply_linearization,
    manufacture,
    manufacture_exact,
    newton_step,
    residual,
    solve,
)
from .subsolution import (
    DichotomyReport,
    SubsolutionReport,
    check_c_subsolution,
    check_c_subsolution_bruteforce,
    check_dichotomy,
    check_supersolution,
    largest_dichotomy_theta,
)

__version__ = "0.1.0"
