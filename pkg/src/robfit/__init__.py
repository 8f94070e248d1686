"""Robust regression with certified outlier tolerance.

Fits Y = AX under a column-wise summable convex loss, so that sparsely
corrupted samples are absorbed instead of leveraged, and computes data
certificates: the self-decomposability amplitude of the regressors, the
exact-recovery threshold it implies, and parametric error bounds under
mixed sparse/dense noise.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    BoundViolationError,
    ConfigError,
    DataError,
    GeneratorError,
    NumericalError,
    RobfitError,
)
from .data_model import (
    Dataset,
    GroundTruth,
    IndexSet,
    hankel_regressors,
    load_dataset,
    load_matrix_csv,
    normalize_columns,
    partition_outliers,
    save_dataset,
    save_matrix_csv,
    unit_columns,
)
from .losses import (
    LossSpec,
    check_p_properties,
    eps_violation_set,
    eval_ell,
    eval_phi,
)
from .lp import LinearProgram, LPSolution, solve_lp
from .estimator import (
    EstimatorResult,
    SolverOpts,
    lad_lp_fit,
    prox_column_loss,
    solve_regression,
    stationarity_probe,
)
from .certificates import (
    Certificate,
    build_certificate,
    certificate_to_json_dict,
    error_bound,
    gamma_lower_bound,
    general_recovery_check,
    pi_c_bruteforce,
    ratio_condition_oracle,
    recovery_threshold,
    sigma_grid_estimate,
    sigma_lower_bound,
    stability_bound_general,
    xi_amplitude,
)
from .generators import (
    GeneratorSpec,
    NoiseSpec,
    gen_regressors,
    ground_truth_matrix,
    inject_noise,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    PointRecord,
    emit_report,
    run_bound_curve,
    run_recovery_experiment,
    run_stability_experiment,
)

__all__ = [
    "__version__",
    "RobfitError",
    "DataError",
    "ConfigError",
    "NumericalError",
    "GeneratorError",
    "BoundViolationError",
    "Dataset",
    "GroundTruth",
    "IndexSet",
    "hankel_regressors",
    "load_dataset",
    "load_matrix_csv",
    "normalize_columns",
    "partition_outliers",
    "save_dataset",
    "save_matrix_csv",
    "unit_columns",
    "LossSpec",
    "check_p_properties",
    "eps_violation_set",
    "eval_ell",
    "eval_phi",
    "LinearProgram",
    "LPSolution",
    "solve_lp",
    "EstimatorResult",
    "SolverOpts",
    "lad_lp_fit",
    "prox_column_loss",
    "solve_regression",
    "stationarity_probe",
    "Certificate",
    "build_certificate",
    "certificate_to_json_dict",
    "error_bound",
    "gamma_lower_bound",
    "general_recovery_check",
    "pi_c_bruteforce",
    "ratio_condition_oracle",
    "recovery_threshold",
    "sigma_grid_estimate",
    "sigma_lower_bound",
    "stability_bound_general",
    "xi_amplitude",
    "GeneratorSpec",
    "NoiseSpec",
    "gen_regressors",
    "ground_truth_matrix",
    "inject_noise",
    "ExperimentConfig",
    "ExperimentReport",
    "PointRecord",
    "emit_report",
    "run_bound_curve",
    "run_recovery_experiment",
    "run_stability_experiment",
]
