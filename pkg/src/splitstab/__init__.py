"""Stability tooling for rotation/kick splitting integrators.

The library studies one-parameter families of splitting schemes for the
perturbed oscillator q'' = -(1 + eps) q: exact transfer matrices, the
semitrace as a polynomial in the perturbation strength, stability
classification and region scans, uniform-substep (Chebyshev) identities,
critical steplengths, and randomized optimality spot-checks.
"""

from .analysis import (
    NoCriticalPoint,
    SpotcheckFailure,
    SpotcheckReport,
    SweepRecord,
    critical_steplength_table,
    default_r_grid,
    optimality_spotcheck,
    spotcheck_scheme,
    three_stage_sweep,
)
from .dynamics import (
    ExponentialBlowup,
    GeneralProblem,
    Mode,
    ModeReduction,
    ModelState,
    NonPositiveLambda,
    NotSimultaneouslyDiagonalizable,
    NotSPD,
    TrajectoryReport,
    integrate_general,
    integrate_model,
    reduce_to_model,
)
from .kernel import (
    EpsilonPolynomial,
    MatrixPolynomial,
    TransferMatrix,
    UnsupportedFamily,
    drift_flow,
    epsilon_polynomial,
    full_kick_flow,
    kick_flow,
    rotation_flow,
    transfer_matrix,
)
from .rng import SplitMix64
from .schemes import (
    ConsistencyViolation,
    FirstFlow,
    ShapeMismatch,
    SingularParameter,
    SplittingScheme,
    ThreeStageParams,
    UnknownScheme,
    catalog_names,
    catalog_scheme,
    check_consistency,
    compose_substeps,
    is_palindromic,
    load_scheme_json,
    random_consistent_scheme,
    random_palindromic_scheme,
    scheme_to_record,
    schemes_equal,
    three_stage_necessary_k,
    three_stage_scheme,
    validate_scheme,
)
from .stability import (
    ConsistencyExpansionReport,
    CriticalSteplength,
    NonUnitDeterminant,
    OutOfRange,
    PolynomialCoincides,
    RegionGrid,
    SecondDerivativeReport,
    StabilityClass,
    StabilityEdges,
    StabilityVerdict,
    check_consistency_expansion,
    chebyshev_polynomial_coeffs,
    chebyshev_semitrace,
    classify,
    critical_steplength,
    grid_nodes,
    instability_witness,
    polynomial_distance,
    scan_region,
    second_derivative_check,
    strang_boundaries,
)

__version__ = "0.1.0"

__all__ = [
    "ConsistencyExpansionReport",
    "ConsistencyViolation",
    "CriticalSteplength",
    "EpsilonPolynomial",
    "ExponentialBlowup",
    "FirstFlow",
    "GeneralProblem",
    "MatrixPolynomial",
    "Mode",
    "ModeReduction",
    "ModelState",
    "NoCriticalPoint",
    "NonPositiveLambda",
    "NonUnitDeterminant",
    "NotSPD",
    "NotSimultaneouslyDiagonalizable",
    "OutOfRange",
    "PolynomialCoincides",
    "RegionGrid",
    "SecondDerivativeReport",
    "ShapeMismatch",
    "SingularParameter",
    "SplitMix64",
    "SplittingScheme",
    "SpotcheckFailure",
    "SpotcheckReport",
    "StabilityClass",
    "StabilityEdges",
    "StabilityVerdict",
    "SweepRecord",
    "ThreeStageParams",
    "TrajectoryReport",
    "TransferMatrix",
    "UnknownScheme",
    "UnsupportedFamily",
    "catalog_names",
    "catalog_scheme",
    "check_consistency",
    "check_consistency_expansion",
    "chebyshev_polynomial_coeffs",
    "chebyshev_semitrace",
    "classify",
    "compose_substeps",
    "critical_steplength",
    "critical_steplength_table",
    "default_r_grid",
    "drift_flow",
    "epsilon_polynomial",
    "full_kick_flow",
    "grid_nodes",
    "instability_witness",
    "integrate_general",
    "integrate_model",
    "is_palindromic",
    "kick_flow",
    "load_scheme_json",
    "optimality_spotcheck",
    "polynomial_distance",
    "random_consistent_scheme",
    "random_palindromic_scheme",
    "reduce_to_model",
    "rotation_flow",
    "scan_region",
    "scheme_to_record",
    "schemes_equal",
    "second_derivative_check",
    "spotcheck_scheme",
    "strang_boundaries",
    "three_stage_necessary_k",
    "three_stage_scheme",
    "three_stage_sweep",
    "transfer_matrix",
    "validate_scheme",
]
