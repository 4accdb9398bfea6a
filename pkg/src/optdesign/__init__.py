"""Locally D- and A-optimal approximate designs for regression models with
and without intercept, and the transfer of optimal designs between the two.
"""

from .design import (
    Design,
    ExperimentalRegion,
    Grid,
    ParamPoint,
    augment_origin,
    make_grid,
    new_design,
    strip_origin,
)
from .equivalence import SensitivityReport, sensitivity, sensitivity_function, verify_local_optimality
from .errors import (
    CertificationError,
    InputError,
    NoConvergence,
    NumericalError,
    OptDesignError,
)
from .infomat import (
    Criterion,
    InfoMatrix,
    a_trace_at_optimal_origin_weight,
    block_inverse,
    criterion_value,
    info_matrix,
    inverse,
    squared_inverse,
)
from .models import (
    Family,
    ModelSpec,
    intensity,
    regression_vector,
    solve_logistic_ustar,
    weighted_regressor,
)
from .optimizer import OptimizerConfig, cluster, d_efficiency, optimize, run_optimizer
from .transfer import (
    HyperplaneCertificate,
    TransferReport,
    check_condition_a,
    check_condition_d,
    compute_T1,
    compute_T2,
    find_hyperplane_c,
    origin_weight,
    transfer_to_intercept,
    transfer_to_no_intercept,
)

__version__ = "0.1.0"

__all__ = [
    "CertificationError",
    "Criterion",
    "Design",
    "ExperimentalRegion",
    "Family",
    "Grid",
    "HyperplaneCertificate",
    "InfoMatrix",
    "InputError",
    "ModelSpec",
    "NoConvergence",
    "NumericalError",
    "OptDesignError",
    "OptimizerConfig",
    "ParamPoint",
    "SensitivityReport",
    "TransferReport",
    "a_trace_at_optimal_origin_weight",
    "augment_origin",
    "block_inverse",
    "check_condition_a",
    "check_condition_d",
    "cluster",
    "compute_T1",
    "compute_T2",
    "criterion_value",
    "d_efficiency",
    "find_hyperplane_c",
    "info_matrix",
    "intensity",
    "inverse",
    "make_grid",
    "new_design",
    "optimize",
    "origin_weight",
    "regression_vector",
    "run_optimizer",
    "sensitivity",
    "sensitivity_function",
    "solve_logistic_ustar",
    "squared_inverse",
    "strip_origin",
    "transfer_to_intercept",
    "transfer_to_no_intercept",
    "verify_local_optimality",
    "weighted_regressor",
]
