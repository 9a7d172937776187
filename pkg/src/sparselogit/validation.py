"""Monte-Carlo benchmark for the tuning parameter, usable only with a known truth.

The benchmark value for coverage level 1 - delta is the smallest grid value
lam such that

    P( 4 * (2 - gamma) / (n * gamma) * ||X.T @ eps||_inf  <=  lam ) >= 1 - delta,

with eps the noise vector y - probabilities(beta_star).  The probability is
estimated by redrawing the response under the true coefficient vector, so
the routine requires both beta_star and the irrepresentability margin gamma
and lives here, outside the data-driven API.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GridTooLowError, ParameterError
from .model import sigmoid
from .solver import LambdaGrid


@dataclass(frozen=True)
class OracleRequest:
    """Inputs of the Monte-Carlo benchmark that are unknowable in practice."""

    delta: float
    n_draws: int
    gamma: float
    truth: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
        if self.n_draws < 1:
            raise ParameterError("n_draws must be at least 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ParameterError("gamma must lie in (0, 1]")
        truth = np.asarray(self.truth, dtype=float).ravel()
        if not np.isfinite(truth).all():
            raise ParameterError("truth contains non-finite entries")
        truth.setflags(write=False)
        object.__setattr__(self, "truth", truth)


@dataclass(frozen=True)
class OracleLambdaEstimate:
    """Smallest covered grid value plus the per-value empirical coverage."""

    lambda_star: float
    lambda_index: int
    coverage: np.ndarray

    def __post_init__(self):
        coverage = np.asarray(self.coverage, dtype=float)
        coverage.setflags(write=False)
        object.__setattr__(self, "coverage", coverage)


def estimate_oracle_lambda(
    design, request: OracleRequest, grid: LambdaGrid, seed
) -> OracleLambdaEstimate:
    """Estimate the benchmark tuning parameter by redrawing the response.

    Each draw generates a fresh binary response from the logistic model under
    ``request.truth``, forms the noise vector and evaluates the scaled
    sup-norm statistic; the coverage of a grid value is the fraction of draws
    whose statistic it dominates.  Draw streams are derived from ``seed`` per
    draw, so the result depends only on (seed, n_draws) and is safe to
    parallelize.

    Raises ``GridTooLowError`` when no grid value reaches coverage
    1 - delta.
    """
    X = np.asarray(design, dtype=float)
    if X.ndim != 2:
        raise DimensionError("design must be a 2-d matrix")
    n, p = X.shape
    if request.truth.shape != (p,):
        raise DimensionError(
            f"truth has shape {request.truth.shape}, expected ({p},)"
        )
    probs = sigmoid(X @ request.truth)
    factor = 4.0 * (2.0 - request.gamma) / (n * request.gamma)

    children = np.random.SeedSequence(seed).spawn(request.n_draws)
    noise = np.empty((request.n_draws, n))
    for d, child in enumerate(children):
        u = np.random.default_rng(child).random(n)
        noise[d] = (u < probs).astype(float) - probs
    statistics = factor * np.abs(noise @ X).max(axis=1)

    coverage = (statistics[:, None] <= grid.values[None, :]).mean(axis=0)
    covered = coverage >= 1.0 - request.delta
    if not covered.any():
        raise GridTooLowError(
            f"no grid value reaches coverage {1.0 - request.delta:.4g}; "
            f"largest observed coverage is {coverage.max():.4g} at "
            f"lam={grid.values[-1]:.6g}"
        )
    index = int(np.argmax(covered))
    return OracleLambdaEstimate(
        lambda_star=float(grid.values[index]),
        lambda_index=index,
        coverage=coverage,
    )
