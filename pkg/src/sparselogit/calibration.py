"""Tuning-parameter selection by pairwise sup-norm tests along the path.

The selected tuning parameter is the smallest grid value lam such that

    max over grid pairs lam', lam'' >= lam of
        ||beta(lam') - beta(lam'')||_inf / (lam' + lam'') - C   <=  0.

Scanning from the largest grid value downward, the pair set grows by one
estimate at a time, so the first failing test settles the selection: the
set of passing grid values is upward closed, and nothing below the failure
needs to be fitted.  Pairs with lam' = lam'' are admitted; their statistic
is -C and never binds.

The estimated support thresholds the selected coefficients at 3 * C * lam.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from .errors import CalibrationError, ParameterError
from .model import Dataset
from .solver import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    LambdaGrid,
    PathPoint,
    RegularizationPath,
    iter_path_descending,
)

#: Default test constant; appropriate for near-orthogonal designs with
#: moderate signal sizes and not meant to be tuned per dataset.
DEFAULT_CONSTANT = 1.5


@dataclass(frozen=True)
class TestRecord:
    """Outcome of the incremental test at one scanned grid value.

    ``statistic`` is max over already-fitted lam' >= lam of
    ||beta(lam') - beta(lam)||_inf / (lam' + lam) - C, so a value of -C
    marks a trivially passing (topmost) point.
    """

    lam: float
    statistic: float
    passed: bool


@dataclass(frozen=True)
class CalibrationResult:
    """Selected tuning parameter, estimate and thresholded support.

    ``lambda_index`` refers to the ascending grid.  ``support_hat`` holds
    the 0-based coordinates with |beta_hat| at or above the threshold
    3 * constant_c * lambda_hat (exact zeros are never included, so the
    support is contained in the support of ``beta_hat`` even when the
    constant is zero).  ``test_trace`` lists the scanned grid values in
    descending order.
    """

    lambda_hat: float
    lambda_index: int
    beta_hat: np.ndarray
    support_hat: np.ndarray
    constant_c: float
    test_trace: tuple[TestRecord, ...]


@njit(cache=True, nogil=True)
def _max_pair_ratio(B, lams, beta_new, lam_new, gap_envelope):
    """Largest sup-norm gap ratio of ``beta_new`` against each row of ``B``.

    Rows are stored in descending-lambda insertion order, so iterating from
    the most recent row walks the denominators upward.  ``gap_envelope``
    bounds every row gap from above, which makes the per-row upper bound
    ``gap_envelope / (lams[r] + lam_new)`` monotonically decreasing along
    the iteration; once it cannot beat the running maximum the remaining
    rows are skipped.  The result is exact.
    """
    best = 0.0
    for r in range(B.shape[0] - 1, -1, -1):
        if gap_envelope <= best * (lams[r] + lam_new):
            break
        m = 0.0
        for j in range(beta_new.shape[0]):
            d = abs(B[r, j] - beta_new[j])
            if d > m:
                m = d
        v = m / (lams[r] + lam_new)
        if v > best:
            best = v
    return best


def _scan_descending(
    points: Iterable[PathPoint], capacity: int, constant_c: float
) -> tuple[PathPoint, tuple[TestRecord, ...]]:
    """Run the incremental tests over descending path points.

    Consumes points until the first failure and returns the smallest passing
    point together with the trace.  Raises when a point at the scan frontier
    is not converged: the sup-norm tests are meaningless on inexact
    estimates.
    """
    trace: list[TestRecord] = []
    selected = None
    buffer = env_lo = env_hi = None
    lams = np.empty(capacity)
    n_kept = 0
    for point in points:
        if not point.converged:
            raise CalibrationError(
                f"solver did not converge at lam={point.lam:.6g}; "
                "cannot evaluate the sup-norm tests"
            )
        if buffer is None:
            buffer = np.empty((capacity, point.beta.shape[0]))
            env_lo = np.full(point.beta.shape[0], np.inf)
            env_hi = np.full(point.beta.shape[0], -np.inf)
        if n_kept == 0:
            ratio = 0.0
        else:
            gap_envelope = float(
                np.maximum(env_hi - point.beta, point.beta - env_lo).max()
            )
            ratio = _max_pair_ratio(
                buffer[:n_kept], lams[:n_kept], point.beta, point.lam, gap_envelope
            )
        statistic = ratio - constant_c
        passed = statistic <= 0.0
        trace.append(TestRecord(lam=point.lam, statistic=float(statistic), passed=passed))
        if not passed:
            break
        buffer[n_kept] = point.beta
        lams[n_kept] = point.lam
        n_kept += 1
        np.minimum(env_lo, point.beta, out=env_lo)
        np.maximum(env_hi, point.beta, out=env_hi)
        selected = point
    if selected is None:
        # unreachable for constant_c >= 0: the topmost statistic is -C
        raise CalibrationError("no grid value passed its tests")
    return selected, tuple(trace)


def select_lambda_testing(
    path: RegularizationPath, constant_c: float = DEFAULT_CONSTANT
) -> tuple[float, int, tuple[TestRecord, ...]]:
    """Apply the pairwise tests to an already fitted path.

    Returns the selected tuning parameter, its index in the ascending grid
    and the per-value test trace (descending scan order).  Path points below
    the first failure are never inspected, so their convergence state does
    not matter.
    """
    if constant_c < 0:
        raise ParameterError("constant_c must be nonnegative")
    selected, trace = _scan_descending(reversed(path.points), len(path), constant_c)
    return selected.lam, path.grid.index_of(selected.lam), trace


def thresholded_support(beta_hat, constant_c: float, lambda_hat: float) -> np.ndarray:
    """Coordinates with |beta_hat| >= 3 * constant_c * lambda_hat.

    The comparison is inclusive, so a coefficient sitting exactly on the
    threshold is selected.  Exact zeros are excluded regardless of the
    threshold, which keeps the result inside supp(beta_hat) when the
    constant is zero.
    """
    if lambda_hat <= 0:
        raise ParameterError("lambda_hat must be positive")
    if constant_c < 0:
        raise ParameterError("constant_c must be nonnegative")
    beta_hat = np.asarray(beta_hat, dtype=float)
    threshold = 3.0 * constant_c * lambda_hat
    return np.flatnonzero((beta_hat != 0.0) & (np.abs(beta_hat) >= threshold))


def calibrate(
    data: Dataset,
    grid: LambdaGrid,
    constant_c: float = DEFAULT_CONSTANT,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fit_intercept: bool = False,
) -> CalibrationResult:
    """Fit lazily from the top of the grid and select by the pairwise tests.

    Fitting proceeds in descending order with warm starts and stops at the
    first grid value whose incremental tests fail, which yields the same
    selection as testing the fully fitted path.  Solver non-convergence
    before the selection settles aborts with a ``CalibrationError``.
    """
    if constant_c < 0:
        raise ParameterError("constant_c must be nonnegative")
    points = iter_path_descending(data, grid, tol=tol, max_iter=max_iter, fit_intercept=fit_intercept)
    selected, trace = _scan_descending(points, len(grid), constant_c)
    support = thresholded_support(selected.beta, constant_c, selected.lam)
    return CalibrationResult(
        lambda_hat=selected.lam,
        lambda_index=grid.index_of(selected.lam),
        beta_hat=selected.beta,
        support_hat=support,
        constant_c=float(constant_c),
        test_trace=trace,
    )
