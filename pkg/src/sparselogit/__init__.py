"""L1-penalized logistic regression with testing-based tuning calibration.

The package fits regularization paths for sparse logistic regression,
selects the tuning parameter either by pairwise sup-norm tests along the
path or by standard calibrators (AIC, BIC, k-fold cross-validation), and
ships a seeded simulation harness plus design-condition diagnostics for
known-truth studies.
"""

__version__ = "0.1.0"

from .baselines import (
    EvaluationReport,
    RefitResult,
    SelectionMethod,
    SelectionOutcome,
    loocv_evaluate,
    refit_unpenalized,
    select,
    select_cross_validation,
    select_information_criterion,
)
from .calibration import (
    DEFAULT_CONSTANT,
    CalibrationResult,
    TestRecord,
    calibrate,
    select_lambda_testing,
    thresholded_support,
)
from .diagnostics import (
    AssumptionDiagnostics,
    assumption_quantities,
    event_holds,
    event_statistic,
    hessian_weights,
    theorem_sup_norm_bound,
)
from .errors import (
    CalibrationError,
    DataValidationError,
    DimensionError,
    GridTooLowError,
    NumericError,
    ParameterError,
)
from .model import (
    Dataset,
    gradient,
    log1pexp,
    negative_log_likelihood,
    predicted_probabilities,
    residuals,
    sigmoid,
)
from .simulation import (
    ExperimentSummary,
    MethodSummary,
    SimulationConfig,
    TraceRow,
    generate_design,
    generate_response,
    generate_truth,
    hamming_distance,
    run_experiment,
)
from .solver import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    LambdaGrid,
    PathPoint,
    RegularizationPath,
    default_grid,
    fit_path,
    fit_single,
    iter_path_descending,
    kkt_residual,
    lambda_zero_threshold,
)
from .validation import OracleLambdaEstimate, OracleRequest, estimate_oracle_lambda
