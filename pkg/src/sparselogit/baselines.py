"""Competing calibrators and the leave-one-out evaluation metrics.

Information criteria and k-fold cross-validation select a tuning parameter
from the same path family as the testing-based scheme; their supports are
the plain supports of the selected estimates (no thresholding).  The
leave-one-out evaluator reruns the full selection inside every fold and
reports model sizes and 0/1 prediction errors, optionally after an
unpenalized refit on the selected support.
"""

from __future__ import annotations

import enum
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .calibration import DEFAULT_CONSTANT, calibrate
from .errors import CalibrationError, NumericError, ParameterError
from .model import Dataset, log1pexp, negative_log_likelihood, sigmoid
from .solver import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    LambdaGrid,
    RegularizationPath,
    default_grid,
    fit_path,
)


class SelectionMethod(str, enum.Enum):
    TESTING = "testing"
    BIC = "bic"
    CV = "cv"
    AIC = "aic"


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of one calibrator run.

    ``support`` is the plain support of ``beta`` for the standard methods
    and the thresholded support for the testing-based scheme.
    ``score_trace`` carries the per-grid-value criterion (ascending grid)
    and is empty for the testing-based scheme.
    """

    method: SelectionMethod
    lam: float
    lambda_index: int
    beta: np.ndarray
    support: np.ndarray
    score_trace: np.ndarray


@dataclass(frozen=True)
class RefitResult:
    """Unpenalized maximum-likelihood fit restricted to a support."""

    beta: np.ndarray
    separation_suspect: bool


@dataclass(frozen=True)
class EvaluationReport:
    """Aggregate leave-one-out results (standard deviations use ddof=0).

    Refit error fields are None when refitting was not requested.  Folds
    whose selection failed are excluded from every statistic and counted in
    ``n_failed``.
    """

    model_size_mean: float
    model_size_sd: float
    loocv_error_mean: float
    loocv_error_sd: float
    loocv_refit_error_mean: float | None
    loocv_refit_error_sd: float | None
    n_evaluated: int
    n_failed: int


def _argmin_tie_larger(values: np.ndarray) -> int:
    """Index of the minimum; exact ties resolve to the largest index."""
    values = np.asarray(values)
    return int(values.size - 1 - np.argmin(values[::-1]))


def select_information_criterion(
    data: Dataset, path: RegularizationPath, kind: SelectionMethod | str
) -> SelectionOutcome:
    """Select by 2n * L + penalty * df along a fully fitted path.

    The degrees of freedom are the nonzero count of the penalized estimate;
    the penalty is 2 per degree for AIC and log(n) for BIC.  Criterion ties
    resolve toward the larger tuning parameter (the sparser model).
    """
    kind = SelectionMethod(kind)
    if kind not in (SelectionMethod.AIC, SelectionMethod.BIC):
        raise ParameterError(f"information criterion must be AIC or BIC, got {kind}")
    for point in path.points:
        if not point.converged:
            raise CalibrationError(
                f"information criteria require a converged path (lam={point.lam:.6g})"
            )
    n = data.n_samples
    nll = np.array([negative_log_likelihood(data, pt.beta, pt.intercept) for pt in path.points])
    df = np.array([np.count_nonzero(pt.beta) for pt in path.points], dtype=float)
    penalty = 2.0 if kind is SelectionMethod.AIC else float(np.log(n))
    criterion = 2.0 * n * nll + penalty * df
    index = _argmin_tie_larger(criterion)
    point = path.points[index]
    return SelectionOutcome(
        method=kind,
        lam=point.lam,
        lambda_index=index,
        beta=point.beta,
        support=np.flatnonzero(point.beta),
        score_trace=criterion,
    )


def _held_out_scores(
    points, X_out: np.ndarray, y_out: np.ndarray, loss: str
) -> np.ndarray:
    betas = np.stack([pt.beta for pt in points])
    intercepts = np.array([pt.intercept for pt in points])
    etas = X_out @ betas.T + intercepts[None, :]
    if loss == "deviance":
        return 2.0 * np.mean(log1pexp(etas) - y_out[:, None] * etas, axis=0)
    if loss == "misclassification":
        predictions = sigmoid(etas) >= 0.5
        return np.mean(predictions != (y_out[:, None] == 1.0), axis=0)
    raise ParameterError(f"unknown cv loss {loss!r}")


def select_cross_validation(
    data: Dataset,
    grid: LambdaGrid,
    k_folds: int = 10,
    seed=0,
    loss: str = "deviance",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fit_intercept: bool = False,
) -> SelectionOutcome:
    """k-fold cross-validation over the grid.

    Samples are partitioned by a seeded permutation into folds whose sizes
    differ by at most one.  Each fold is scored on held-out mean binomial
    deviance (misclassification rate behind ``loss``); the tuning parameter
    minimizing the across-fold mean wins, ties resolving toward the larger
    value.  The returned estimate refits the full data down to the selected
    value.  A fold whose training response is constant is still fit, with a
    warning.
    """
    n = data.n_samples
    if k_folds < 2:
        raise ParameterError("k_folds must be at least 2")
    if k_folds > n:
        raise ParameterError("k_folds cannot exceed the number of samples")
    permutation = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(permutation, k_folds)

    scores = np.empty((k_folds, len(grid)))
    for f, fold in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        y_train = data.y[mask]
        if y_train.min() == y_train.max():
            warnings.warn(
                f"cv fold {f}: training response is constant; fitting anyway",
                RuntimeWarning,
                stacklevel=2,
            )
        train = Dataset(data.X[mask], y_train)
        path = fit_path(train, grid, tol=tol, max_iter=max_iter, fit_intercept=fit_intercept)
        scores[f] = _held_out_scores(path.points, data.X[fold], data.y[fold], loss)

    mean_scores = scores.mean(axis=0)
    index = _argmin_tie_larger(mean_scores)
    # warm-started refit on the full data, from the top down to the winner
    tail = LambdaGrid(grid.values[index:])
    point = fit_path(data, tail, tol=tol, max_iter=max_iter, fit_intercept=fit_intercept).points[0]
    return SelectionOutcome(
        method=SelectionMethod.CV,
        lam=point.lam,
        lambda_index=index,
        beta=point.beta,
        support=np.flatnonzero(point.beta),
        score_trace=mean_scores,
    )


#: Sup-norm size of a refit above which separation is suspected.
SEPARATION_BOUND = 30.0


def refit_unpenalized(
    data: Dataset,
    support,
    ridge: float = 1e-8,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> RefitResult:
    """Maximum-likelihood logistic fit restricted to the support columns.

    Newton iterations with step halving; the Newton system carries a small
    ridge stabilizer.  Coordinates outside the support stay exactly zero.
    An empty support returns the zero vector.  When the restricted fit grows
    beyond ``SEPARATION_BOUND`` in sup-norm it is flagged separation-suspect
    but still returned.
    """
    p = data.n_features
    S = np.unique(np.asarray(support, dtype=int).ravel())
    if S.size and (S[0] < 0 or S[-1] >= p):
        raise ParameterError("support indices out of range")
    beta = np.zeros(p)
    if S.size == 0:
        return RefitResult(beta=beta, separation_suspect=False)

    Xs = np.ascontiguousarray(data.X[:, S])
    y = data.y
    n = data.n_samples
    beta_s = np.zeros(S.size)
    eta = Xs @ beta_s
    nll = float(np.mean(log1pexp(eta) - y * eta))
    for _ in range(max_iter):
        probs = sigmoid(eta)
        g = Xs.T @ (probs - y) / n
        if np.abs(g).max() <= tol:
            break
        w = probs * (1.0 - probs)
        H = Xs.T @ (w[:, None] * Xs) / n + ridge * np.eye(S.size)
        step = np.linalg.solve(H, -g)
        scale = 1.0
        for _ in range(31):
            cand = beta_s + scale * step
            cand_eta = Xs @ cand
            cand_nll = float(np.mean(log1pexp(cand_eta) - y * cand_eta))
            if np.isfinite(cand_nll) and cand_nll <= nll + 1e-12 * (1.0 + abs(nll)):
                beta_s, eta, nll = cand, cand_eta, cand_nll
                break
            scale *= 0.5
        else:
            break  # no improving step length; accept the current iterate

    beta[S] = beta_s
    return RefitResult(
        beta=beta,
        separation_suspect=bool(np.abs(beta_s).max() > SEPARATION_BOUND),
    )


def select(
    data: Dataset,
    grid: LambdaGrid,
    method: SelectionMethod | str,
    constant_c: float = DEFAULT_CONSTANT,
    k_folds: int = 10,
    seed=0,
    cv_loss: str = "deviance",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fit_intercept: bool = False,
) -> SelectionOutcome:
    """Run one calibrator end to end; the shared entry point of the bench code.

    The testing-based scheme fits lazily and stops early; the information
    criteria fit one full path; cross-validation fits ``k_folds`` paths plus
    the final refit.
    """
    method = SelectionMethod(method)
    if method is SelectionMethod.TESTING:
        result = calibrate(
            data, grid, constant_c=constant_c, tol=tol, max_iter=max_iter,
            fit_intercept=fit_intercept,
        )
        return SelectionOutcome(
            method=method,
            lam=result.lambda_hat,
            lambda_index=result.lambda_index,
            beta=result.beta_hat,
            support=result.support_hat,
            score_trace=np.empty(0),
        )
    if method is SelectionMethod.CV:
        return select_cross_validation(
            data, grid, k_folds=k_folds, seed=seed, loss=cv_loss,
            tol=tol, max_iter=max_iter, fit_intercept=fit_intercept,
        )
    path = fit_path(data, grid, tol=tol, max_iter=max_iter, fit_intercept=fit_intercept)
    return select_information_criterion(data, path, method)


def _predict_error(x_row: np.ndarray, beta: np.ndarray, y_true: float) -> float:
    # probability exactly 1/2 classifies as 1
    prediction = 1.0 if float(sigmoid(np.array([x_row @ beta]))[0]) >= 0.5 else 0.0
    return float(prediction != y_true)


def loocv_evaluate(
    data: Dataset,
    method: SelectionMethod | str,
    refit: bool = True,
    constant_c: float = DEFAULT_CONSTANT,
    k_cv: int = 10,
    seed=0,
    grid: LambdaGrid | None = None,
    n_lambda: int = 500,
    threads: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EvaluationReport:
    """Leave-one-out evaluation of a calibrator.

    For every held-out sample the entire selection (including any inner
    cross-validation, on per-fold derived seeds) reruns on the remaining
    samples; the held-out response is predicted by thresholding the
    predicted probability at 1/2, with 1/2 itself classified as 1.  When
    ``refit`` is set, the prediction is additionally made from the
    unpenalized refit on the selected support.  Selection failures exclude
    the fold and are counted.
    """
    method = SelectionMethod(method)
    n = data.n_samples
    if n < 2:
        raise ParameterError("leave-one-out evaluation needs at least two samples")
    if grid is None:
        grid = default_grid(n, data.n_features, n_lambda)

    def run_fold(i: int):
        mask = np.ones(n, dtype=bool)
        mask[i] = False
        train = Dataset(data.X[mask], data.y[mask])
        try:
            outcome = select(
                train, grid, method, constant_c=constant_c, k_folds=k_cv,
                seed=[_as_seed_int(seed), i], tol=tol, max_iter=max_iter,
            )
        except (CalibrationError, NumericError):
            return None
        x_i, y_i = data.X[i], float(data.y[i])
        error = _predict_error(x_i, outcome.beta, y_i)
        refit_error = None
        if refit:
            refit_error = _predict_error(x_i, refit_unpenalized(train, outcome.support).beta, y_i)
        return outcome.support.size, error, refit_error

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_fold, range(n)))
    else:
        records = [run_fold(i) for i in range(n)]

    completed = [r for r in records if r is not None]
    n_failed = n - len(completed)
    if not completed:
        raise CalibrationError("selection failed in every leave-one-out fold")
    sizes = np.array([r[0] for r in completed], dtype=float)
    errors = np.array([r[1] for r in completed])
    refit_mean = refit_sd = None
    if refit:
        refit_errors = np.array([r[2] for r in completed])
        refit_mean = float(refit_errors.mean())
        refit_sd = float(refit_errors.std())
    return EvaluationReport(
        model_size_mean=float(sizes.mean()),
        model_size_sd=float(sizes.std()),
        loocv_error_mean=float(errors.mean()),
        loocv_error_sd=float(errors.std()),
        loocv_refit_error_mean=refit_mean,
        loocv_refit_error_sd=refit_sd,
        n_evaluated=len(completed),
        n_failed=n_failed,
    )


def _as_seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    # collapse composite seeds deterministically
    return int(np.random.SeedSequence(seed).generate_state(1)[0])
