"""Numerical laboratory for a limit-periodic drift and the criticality of its operators.

The drift is ``b = sigma * sin(pi x)**4`` with ``sigma`` a recursively defined
odd step function.  The package evaluates it exactly, builds the two
counter-example operators ``u'' -+ 2 b u'`` and their self-adjoint forms,
computes Dirichlet eigenvalues, classifies criticality, and checks the
supporting inequalities end to end.
"""

from .criticality import (
    CRITICAL,
    INCONCLUSIVE,
    SUBCRITICAL,
    SUPERCRITICAL,
    CriticalityReport,
    DirectionalIntegrals,
    LiminfCertificate,
    PositiveSolution,
    SubsolutionCertificate,
    classify,
    classify_preset,
    ground_state,
    liminf_certificate,
    ratio_divergence_check,
    second_solution_integrals,
    subsolution_certificate,
    wronskian,
    wronskian_constancy,
)
from .errors import (
    ConvergenceError,
    CritlabError,
    DegeneratePairError,
    DiscretizationError,
    InvalidArgumentError,
    NumericalError,
    TranslationRangeError,
    UnsupportedOperatorError,
)
from .limit_periodic import (
    DriftField,
    LimitField,
    SigmaField,
    almost_period_defect,
    b_antiderivative,
    b_deriv_eval,
    b_eval,
    limit_field_eval,
    mean_value,
    sigma_eval,
    translated_eval,
)
from .operators import Gauge, Operator1D, Preset, gauge_transform, limit_operator, make_operator, translate_operator
from .spectral import (
    EigenResult,
    Grid,
    dirichlet_principal_eigenvalue,
    eigenvalue_sweep,
    rayleigh_quotient,
    solve_ivp,
)
from .verification import (
    PipelineReport,
    VerificationRecord,
    find_K_and_verify_lower_bound,
    run_ce1,
    run_ce2,
    verify_kn_lower,
    verify_kn_upper,
    verify_limit_averages,
)

__version__ = "0.1.0"
