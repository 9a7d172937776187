"""Core primitives of the binary logistic model.

Everything downstream (the path solver, the calibrators, the simulation
harness) is built on the handful of pure functions in this module, so they
are kept small and overflow-safe.  The model has no intercept by default;
fitting routines accept an optional unpenalized intercept, which enters
here only as a scalar offset on the linear predictor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DataValidationError, DimensionError, NumericError


def log1pexp(t):
    """Evaluate log(1 + exp(t)) without overflow.

    Uses max(t, 0) + log1p(exp(-|t|)), which agrees with the naive form in
    double precision wherever that form is representable and stays finite
    for arbitrarily large |t|.
    """
    t = np.asarray(t, dtype=float)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def sigmoid(t):
    """Overflow-safe logistic function exp(t) / (1 + exp(t)).

    The exponential only ever sees non-positive arguments.  No artificial
    clipping is applied: extreme inputs saturate to 0.0 or 1.0 through
    ordinary floating-point rounding.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    expt = np.exp(t[~pos])
    out[~pos] = expt / (1.0 + expt)
    return out


@dataclass(frozen=True)
class Dataset:
    """An immutable design matrix / binary response pair.

    Parameters
    ----------
    X : ndarray of shape (n, p)
        Real-valued design matrix; every entry must be finite.  Stored
        internally in column-major (Fortran) order, which is the access
        pattern of the coordinate-wise solver.
    y : ndarray of shape (n,)
        Binary response; entries must be exactly 0 or 1.

    Both arrays are copied and marked read-only, so a ``Dataset`` can be
    shared freely across threads.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise DimensionError(f"design matrix must be 2-d, got ndim={X.ndim}")
        if y.ndim != 1:
            raise DimensionError(f"response must be 1-d, got ndim={y.ndim}")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(
                f"design matrix has {X.shape[0]} rows but response has length {y.shape[0]}"
            )
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DataValidationError("dataset must have at least one sample and one predictor")
        if not np.isfinite(X).all():
            raise DataValidationError("design matrix contains non-finite entries")
        if not np.isin(y, (0.0, 1.0)).all():
            raise DataValidationError("response entries must be exactly 0 or 1")
        X = np.asfortranarray(X)
        X.setflags(write=False)
        y = np.ascontiguousarray(y)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @cached_property
    def max_abs_entry(self) -> float:
        """Largest absolute entry of the design matrix."""
        return float(np.abs(self.X).max())


def _linear_predictor(data: Dataset, beta, intercept: float) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.n_features,):
        raise DimensionError(
            f"coefficient vector has shape {beta.shape}, expected ({data.n_features},)"
        )
    eta = data.X @ beta
    if intercept != 0.0:
        eta = eta + intercept
    if not np.isfinite(eta).all():
        bad = int(np.flatnonzero(~np.isfinite(eta))[0])
        raise NumericError(f"non-finite linear predictor at sample index {bad}")
    return eta


def predicted_probabilities(data: Dataset, beta, intercept: float = 0.0) -> np.ndarray:
    """Per-sample probabilities of a positive response under the logistic model."""
    return sigmoid(_linear_predictor(data, beta, intercept))


def negative_log_likelihood(data: Dataset, beta, intercept: float = 0.0) -> float:
    """Sample-averaged negative log-likelihood.

    Computed as mean(log(1 + exp(eta)) - y * eta) with the stable
    ``log1pexp`` form, where eta is the linear predictor.
    """
    eta = _linear_predictor(data, beta, intercept)
    value = float(np.mean(log1pexp(eta) - data.y * eta))
    if not np.isfinite(value):
        raise NumericError("negative log-likelihood evaluated to a non-finite value")
    return value


def gradient(data: Dataset, beta, intercept: float = 0.0) -> np.ndarray:
    """Gradient of the negative log-likelihood with respect to beta.

    Equals X.T @ (probabilities - y) / n.
    """
    resid = predicted_probabilities(data, beta, intercept) - data.y
    return data.X.T @ resid / data.n_samples


def residuals(data: Dataset, beta_star, intercept: float = 0.0) -> np.ndarray:
    """Noise vector y - probabilities evaluated at a reference coefficient vector.

    Each entry lies strictly inside (-1, 1).
    """
    return data.y - predicted_probabilities(data, beta_star, intercept)
