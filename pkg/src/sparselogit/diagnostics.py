"""Design-condition diagnostics for instances where the truth is known.

These quantities (minimal eigenvalue of the weighted Gram on the true
support, irrepresentability margin, norm-equivalence ratio, entry bound)
are what the selection guarantees are stated in terms of.  None of them is
estimable without the true coefficient vector, so this module only serves
validation workflows and simulation studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .model import sigmoid


@dataclass(frozen=True)
class AssumptionDiagnostics:
    """Condition numbers of a known-truth instance.

    ``c_min`` is the minimal eigenvalue of the weighted Gram matrix on the
    true support (scaled by 1/n), ``c_max`` the maximal eigenvalue of the
    unweighted full Gram, ``gamma`` the irrepresentability margin, ``a`` the
    row-sum-to-spectral norm ratio of the inverted support Gram and ``c_b``
    the largest absolute design entry.  Fields that are undefined (empty
    support, singular support Gram) are NaN.  ``lambda_cap`` is the largest
    tuning parameter the sup-norm guarantee tolerates,
    gamma * c_min**2 / (100 * c_b * (2 - gamma) * s * c_max), and is NaN
    unless ``assumptions_hold``.
    """

    c_min: float
    c_max: float
    gamma: float
    a: float
    c_b: float
    lambda_cap: float
    assumptions_hold: bool


def hessian_weights(X, beta_star) -> np.ndarray:
    """Per-sample curvature weights exp(eta) / (1 + exp(eta))**2.

    Identical to p * (1 - p) with p the predicted probabilities; every value
    lies in (0, 1/4].
    """
    X = np.asarray(X, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if X.ndim != 2 or beta_star.shape != (X.shape[1],):
        raise DimensionError("design and coefficient shapes do not agree")
    probs = sigmoid(X @ beta_star)
    return probs * (1.0 - probs)


def assumption_quantities(X, beta_star, support) -> AssumptionDiagnostics:
    """Compute the diagnostics record for a known-truth instance.

    ``support`` is the 0-based index set of the true nonzero coordinates.
    An empty support yields partial diagnostics (only ``c_max`` and ``c_b``),
    and a singular support Gram reports c_min = 0 with the dependent fields
    NaN instead of raising.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("design must be a 2-d matrix")
    n, p = X.shape
    S = np.unique(np.asarray(support, dtype=int).ravel())
    if S.size and (S[0] < 0 or S[-1] >= p):
        raise ParameterError("support indices out of range")

    c_b = float(np.abs(X).max())
    c_max = float(np.linalg.svd(X, compute_uv=False)[0] ** 2 / n)
    if S.size == 0:
        return AssumptionDiagnostics(
            c_min=math.nan, c_max=c_max, gamma=math.nan, a=math.nan,
            c_b=c_b, lambda_cap=math.nan, assumptions_hold=False,
        )

    w = hessian_weights(X, beta_star)
    Xs = X[:, S]
    A = Xs.T @ (w[:, None] * Xs) / n
    eigenvalues = np.linalg.eigvalsh(A)
    if eigenvalues[0] <= 0 or eigenvalues[0] <= eigenvalues[-1] * 1e-12:
        # relevant predictors are (numerically) linearly dependent
        return AssumptionDiagnostics(
            c_min=0.0, c_max=c_max, gamma=math.nan, a=math.nan,
            c_b=c_b, lambda_cap=math.nan, assumptions_hold=False,
        )
    c_min = float(eigenvalues[0])

    complement = np.setdiff1d(np.arange(p), S)
    if complement.size:
        B = Xs.T @ (w[:, None] * X[:, complement]) / n
        M = np.linalg.solve(A, B)
        # one comparison per irrelevant predictor: the l1 norm of its
        # weighted regression onto the relevant block (column sums of M)
        gamma = 1.0 - float(np.abs(M).sum(axis=0).max())
    else:
        gamma = 1.0

    A_inv = np.linalg.inv(A)
    a = float(np.abs(A_inv).sum(axis=1).max() / np.linalg.norm(A_inv, 2))

    holds = c_min > 0 and gamma > 0
    if holds:
        lambda_cap = gamma * c_min**2 / (100.0 * c_b * (2.0 - gamma) * S.size * c_max)
    else:
        lambda_cap = math.nan
    return AssumptionDiagnostics(
        c_min=c_min, c_max=c_max, gamma=gamma, a=a,
        c_b=c_b, lambda_cap=float(lambda_cap), assumptions_hold=holds,
    )


def event_statistic(X, epsilon, gamma: float) -> float:
    """Scaled noise statistic 4 * (2 - gamma) * ||X.T @ eps||_inf / (n * gamma)."""
    if not 0.0 < gamma <= 1.0:
        raise ParameterError("gamma must lie in (0, 1]")
    X = np.asarray(X, dtype=float)
    epsilon = np.asarray(epsilon, dtype=float)
    if X.ndim != 2 or epsilon.shape != (X.shape[0],):
        raise DimensionError("design and residual shapes do not agree")
    n = X.shape[0]
    return float(4.0 * (2.0 - gamma) / (n * gamma) * np.abs(X.T @ epsilon).max())


def event_holds(X, epsilon, gamma: float, lam: float) -> bool:
    """Whether the scaled noise statistic is dominated by ``lam``."""
    if lam <= 0:
        raise ParameterError("lam must be positive")
    return event_statistic(X, epsilon, gamma) <= lam


def theorem_sup_norm_bound(diag: AssumptionDiagnostics, lam: float) -> float:
    """Guaranteed sup-norm estimation error at ``lam``: 1.5 * a * lam / c_min.

    Only meaningful when the design conditions hold; raises otherwise.
    """
    if not diag.assumptions_hold:
        raise ParameterError("sup-norm bound is undefined: design conditions do not hold")
    return 1.5 * diag.a * lam / diag.c_min
