"""Path solver for the l1-penalized logistic objective.

The minimized objective at a tuning parameter ``lam`` is

    L(beta) + lam * ||beta||_1,

with L the sample-averaged logistic negative log-likelihood.  The algorithm
is the classical generalized-linear-model path scheme: an outer
proximal-Newton loop forms a weighted least-squares approximation of L at
the current iterate, and cyclic coordinate descent with soft-thresholding
solves each weighted subproblem.  Within a subproblem, one full sweep over
all coordinates is followed by sweeps restricted to the current nonzero set
until those stabilize, then another full sweep verifies; the cycle repeats
until a full sweep changes nothing.  Optimality is always certified on the
true objective through the sup-norm KKT residual, never on the subproblem.

Whole grids are fitted in descending order of the tuning parameter so each
solution warm-starts the next, which is also what lets the calibrator stop
fitting as soon as its tests fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numba import njit

from .errors import DimensionError, NumericError, ParameterError
from .model import Dataset, gradient, log1pexp, sigmoid

#: Lower bound on the quadratic-approximation weights; prevents stalls once
#: predicted probabilities saturate.
WEIGHT_FLOOR = 1e-5

#: Default sup-norm KKT tolerance.
DEFAULT_TOL = 1e-7

#: Default total coordinate-sweep budget for one tuning parameter.
DEFAULT_MAX_ITER = 10_000

_MAX_STEP_HALVINGS = 30

#: Sweep budget of a single subproblem call.  Re-linearizing (and re-checking
#: the true KKT certificate) this often is much cheaper than polishing one
#: ill-conditioned quadratic model to death.
_SWEEPS_PER_LINEARIZATION = 100


@dataclass(frozen=True)
class LambdaGrid:
    """A strictly increasing sequence of positive tuning parameters.

    Input values are sorted at construction; duplicates are rejected rather
    than silently dropped.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size < 1:
            raise ParameterError("tuning-parameter grid must contain at least one value")
        if not np.isfinite(values).all():
            raise ParameterError("tuning-parameter grid contains non-finite values")
        if (values <= 0).any():
            raise ParameterError("tuning-parameter grid values must be strictly positive")
        values = np.sort(values)
        if values.size > 1 and (np.diff(values) == 0).any():
            dup = values[np.flatnonzero(np.diff(values) == 0)[0]]
            raise ParameterError(f"tuning-parameter grid contains duplicate value {dup!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    def __iter__(self):
        return iter(self.values)

    def index_of(self, lam: float) -> int:
        """Position of an exact grid member in ascending order."""
        idx = int(np.searchsorted(self.values, lam))
        if idx >= len(self) or self.values[idx] != lam:
            raise ParameterError(f"{lam!r} is not a grid value")
        return idx


def default_grid(n: int, p: int, n_lambda: int = 500) -> LambdaGrid:
    """Equally spaced grid anchored at lam_max = 10 * log(p) / n.

    The smallest value is 1e-4 times the largest and the spacing is linear.
    A single-point grid consists of the anchor value alone.
    """
    if n < 1 or p < 1:
        raise ParameterError("n and p must be at least 1")
    if n_lambda < 1:
        raise ParameterError("n_lambda must be at least 1")
    lam_max = 10.0 * math.log(p) / n
    if n_lambda == 1:
        return LambdaGrid(np.array([lam_max]))
    return LambdaGrid(np.linspace(1e-4 * lam_max, lam_max, n_lambda))


@dataclass(frozen=True)
class PathPoint:
    """Solution record at one tuning parameter.

    ``kkt_residual`` is the sup-norm violation of the subgradient optimality
    conditions of the true objective (including the unpenalized intercept
    gradient when an intercept was fitted); it is at most the solver
    tolerance whenever ``converged`` is true.  ``iterations`` counts
    coordinate sweeps.
    """

    lam: float
    beta: np.ndarray
    intercept: float
    kkt_residual: float
    iterations: int
    converged: bool

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)


@dataclass(frozen=True)
class RegularizationPath:
    """Per-grid-value solutions, aligned with the ascending grid."""

    grid: LambdaGrid
    points: tuple[PathPoint, ...]

    def __post_init__(self):
        if len(self.points) != len(self.grid):
            raise DimensionError(
                f"path has {len(self.points)} points for a grid of size {len(self.grid)}"
            )
        for lam, point in zip(self.grid.values, self.points):
            if point.lam != lam:
                raise ParameterError(
                    f"path point at lam={point.lam!r} does not match grid value {lam!r}"
                )

    def __len__(self) -> int:
        return len(self.points)

    def beta_matrix(self) -> np.ndarray:
        """Estimates stacked row-wise, one row per grid value (ascending)."""
        return np.stack([point.beta for point in self.points])


@njit(cache=True, nogil=True)
def _sweep(X, w, r, beta, colss, lam, idx, n):
    """One pass of coordinate soft-threshold updates over ``idx``.

    ``r`` is the working residual z - intercept - X @ beta and is kept in
    sync.  Returns the largest absolute coefficient change.
    """
    delta = 0.0
    for t in range(idx.shape[0]):
        j = idx[t]
        cj = colss[j]
        bj = beta[j]
        if cj > 0.0:
            acc = 0.0
            for i in range(n):
                acc += w[i] * X[i, j] * r[i]
            rho = acc / n + cj * bj
            if rho > lam:
                bnew = (rho - lam) / cj
            elif rho < -lam:
                bnew = (rho + lam) / cj
            else:
                bnew = 0.0
        else:
            # zero weighted column variance: only the penalty acts
            bnew = 0.0
        d = bnew - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * d
            beta[j] = bnew
            ad = abs(d)
            if ad > delta:
                delta = ad
    return delta


@njit(cache=True, nogil=True)
def _intercept_step(w, r, wbar, n):
    acc = 0.0
    for i in range(n):
        acc += w[i] * r[i]
    d = acc / n / wbar
    for i in range(n):
        r[i] -= d
    return d


@njit(cache=True, nogil=True)
def _cd_subproblem(X, w, z, beta, intercept, lam, fit_intercept, inner_tol, sweep_budget):
    """Solve the weighted least-squares subproblem by coordinate descent.

    Minimizes sum(w * (z - intercept - X @ beta)**2) / (2n) + lam * ||beta||_1
    in place, following the full-sweep / active-set / verify cycle.  Returns
    the updated intercept and the number of sweeps consumed.
    """
    n, p = X.shape
    r = z.copy()
    if fit_intercept:
        for i in range(n):
            r[i] -= intercept
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * bj
    colss = np.empty(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += w[i] * X[i, j] * X[i, j]
        colss[j] = acc / n
    wbar = 0.0
    for i in range(n):
        wbar += w[i]
    wbar /= n

    all_idx = np.arange(p)
    sweeps = 0
    while sweeps < sweep_budget:
        dint = 0.0
        if fit_intercept:
            d = _intercept_step(w, r, wbar, n)
            intercept += d
            dint = abs(d)
        delta = _sweep(X, w, r, beta, colss, lam, all_idx, n)
        if dint > delta:
            delta = dint
        sweeps += 1
        if delta <= inner_tol:
            break
        active = np.nonzero(beta)[0]
        while sweeps < sweep_budget:
            dint = 0.0
            if fit_intercept:
                d = _intercept_step(w, r, wbar, n)
                intercept += d
                dint = abs(d)
            delta_a = _sweep(X, w, r, beta, colss, lam, active, n)
            if dint > delta_a:
                delta_a = dint
            sweeps += 1
            if delta_a <= inner_tol:
                break
    return intercept, sweeps


def _kkt_from_gradient(g: np.ndarray, beta: np.ndarray, lam: float) -> float:
    nz = beta != 0
    value = 0.0
    if nz.any():
        value = float(np.abs(g[nz] + lam * np.sign(beta[nz])).max())
    if (~nz).any():
        value = max(value, max(0.0, float(np.abs(g[~nz]).max()) - lam))
    return value


def kkt_residual(data: Dataset, beta, lam: float, intercept: float = 0.0) -> float:
    """Sup-norm violation of the subgradient optimality conditions.

    For nonzero coordinates this is |g_j + lam * sign(beta_j)|; for zero
    coordinates it is max(0, |g_j| - lam), with g the gradient of the
    negative log-likelihood.  The value is zero exactly at a minimizer.
    """
    if lam <= 0:
        raise ParameterError("lam must be positive")
    g = gradient(data, beta, intercept)
    return _kkt_from_gradient(g, np.asarray(beta, dtype=float), lam)


def lambda_zero_threshold(data: Dataset) -> float:
    """Smallest tuning parameter at which the all-zero vector is optimal.

    Equals the sup-norm of X.T @ (y - 1/2) / n; for any lam at or above this
    value the solver returns exactly zero.
    """
    return float(np.abs(data.X.T @ (data.y - 0.5)).max() / data.n_samples)


def _penalized_objective(y: np.ndarray, eta: np.ndarray, beta: np.ndarray, lam: float) -> float:
    return float(np.mean(log1pexp(eta) - y * eta) + lam * np.abs(beta).sum())


def fit_single(
    data: Dataset,
    lam: float,
    init=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fit_intercept: bool = False,
    init_intercept: float = 0.0,
    objective_log: list | None = None,
) -> PathPoint:
    """Solve the penalized problem at a single tuning parameter.

    Parameters
    ----------
    data : Dataset
        Observations to fit.
    lam : float
        Positive tuning parameter.
    init : array-like, optional
        Starting coefficients (copied); zeros when omitted.
    tol : float
        Convergence threshold on the sup-norm KKT residual of the true
        objective.
    max_iter : int
        Total coordinate-sweep budget.  When exhausted the best iterate is
        returned with ``converged=False`` rather than raising.
    fit_intercept : bool
        Estimate an unpenalized intercept alongside the coefficients.
    init_intercept : float
        Starting intercept (ignored unless ``fit_intercept``).
    objective_log : list, optional
        Internal seam: the penalized objective is appended once at the start
        and after every accepted outer step.

    Returns
    -------
    PathPoint
        The iterate with the lowest penalized objective reached.  Its
        objective never exceeds the objective of the starting point.
    """
    if lam <= 0:
        raise ParameterError("lam must be positive")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    X, y = data.X, data.y
    n, p = X.shape
    if init is None:
        beta = np.zeros(p)
    else:
        beta = np.array(init, dtype=float)
        if beta.shape != (p,):
            raise DimensionError(f"init has shape {beta.shape}, expected ({p},)")
        if not np.isfinite(beta).all():
            raise NumericError("init contains non-finite entries")
    b0 = float(init_intercept) if fit_intercept else 0.0

    eta = X @ beta
    if fit_intercept and b0 != 0.0:
        eta = eta + b0
    if not np.isfinite(eta).all():
        raise NumericError("non-finite linear predictor at the starting point")
    obj = _penalized_objective(y, eta, beta, lam)
    if objective_log is not None:
        objective_log.append(obj)

    sweeps = 0
    kkt = np.inf
    converged = False
    while True:
        probs = sigmoid(eta)
        g = X.T @ (probs - y) / n
        kkt = _kkt_from_gradient(g, beta, lam)
        if fit_intercept:
            kkt = max(kkt, abs(float(np.mean(probs - y))))
        if kkt <= tol:
            converged = True
            break
        if sweeps >= max_iter:
            break

        w = np.maximum(probs * (1.0 - probs), WEIGHT_FLOOR)
        z = eta + (y - probs) / w
        cand = beta.copy()
        # inexact subproblem solve: the forcing tolerance tracks the current
        # certificate, so early linearizations stay cheap
        inner_tol = min(max(kkt * 1e-2, tol * 1e-2), 1e-4)
        cand_b0, used = _cd_subproblem(
            X, w, z, cand, b0, lam, fit_intercept, inner_tol,
            min(_SWEEPS_PER_LINEARIZATION, max_iter - sweeps),
        )
        sweeps += int(used)

        # The quadratic model can overshoot the true objective; back off
        # along the segment toward the current iterate until it does not.
        step_beta, step_b0 = cand, float(cand_b0)
        accepted = False
        for _ in range(_MAX_STEP_HALVINGS + 1):
            step_eta = X @ step_beta
            if fit_intercept and step_b0 != 0.0:
                step_eta = step_eta + step_b0
            step_obj = _penalized_objective(y, step_eta, step_beta, lam)
            if np.isfinite(step_obj) and step_obj <= obj + 1e-12 * (1.0 + abs(obj)):
                accepted = True
                break
            step_beta = 0.5 * (step_beta + beta)
            step_b0 = 0.5 * (step_b0 + b0)
        if not accepted:
            break  # stalled; report the current iterate as non-converged
        beta, b0, eta, obj = step_beta, step_b0, step_eta, step_obj
        if objective_log is not None:
            objective_log.append(obj)

    return PathPoint(
        lam=float(lam),
        beta=beta,
        intercept=b0 if fit_intercept else 0.0,
        kkt_residual=float(kkt),
        iterations=int(sweeps),
        converged=converged,
    )


def iter_path_descending(
    data: Dataset,
    grid: LambdaGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fit_intercept: bool = False,
) -> Iterator[PathPoint]:
    """Yield solutions from the largest grid value downward with warm starts.

    Consumers that stop early (the testing-based calibrator) never pay for
    the rest of the grid.
    """
    init = None
    b0 = 0.0
    for lam in grid.values[::-1]:
        try:
            point = fit_single(
                data,
                float(lam),
                init=init,
                tol=tol,
                max_iter=max_iter,
                fit_intercept=fit_intercept,
                init_intercept=b0,
            )
        except NumericError as exc:
            raise NumericError(f"path fit failed at lam={lam:.6g}: {exc}") from exc
        init = point.beta
        b0 = point.intercept
        yield point


def fit_path(
    data: Dataset,
    grid: LambdaGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    fit_intercept: bool = False,
) -> RegularizationPath:
    """Fit the whole grid (descending, warm-started) and align it ascending."""
    points = list(iter_path_descending(data, grid, tol, max_iter, fit_intercept))
    return RegularizationPath(grid=grid, points=tuple(reversed(points)))
