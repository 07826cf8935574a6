"""Label interrelation: how well one attribute's scores are explained by a
linear model over all other attributes' scores, summarized as R squared."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError
from .tables import PredictionRun

# Gram matrices with condition numbers beyond this are treated as singular
# and solved with a small ridge term instead.
CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-8


@dataclass(frozen=True)
class OLSFit:
    coefficients: np.ndarray  # intercept first, then one weight per feature
    r_squared: float
    condition_flag: bool  # ridge fallback engaged


def fit_ols(features: np.ndarray, target: np.ndarray) -> OLSFit:
    """Least squares with intercept via the normal equations.

    A numerically singular Gram matrix falls back to ridge with
    lambda = 1e-8 * trace / dim, flagged on the result; the fit is diagnostic,
    so exactness under collinearity is not required.
    """
    features = np.asarray(features, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if features.ndim != 2 or target.ndim != 1 or features.shape[0] != target.shape[0]:
        raise ArgumentError(
            f"features must be n x p with an n-length target, got {features.shape} and {target.shape}"
        )
    n, p = features.shape
    if n <= p + 1:
        raise ArgumentError(f"need more samples than features plus intercept, got n={n}, p={p}")

    if target.max() == target.min():
        raise DegenerateInputError("target has zero variance; R^2 is undefined")
    ss_tot = float(np.sum((target - target.mean()) ** 2))

    design = np.column_stack([np.ones(n), features])
    gram = design.T @ design
    rhs = design.T @ target

    condition_flag = False
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        condition_flag = True
        gram = gram + np.eye(p + 1) * (RIDGE_SCALE * np.trace(gram) / (p + 1))
    coefficients = np.linalg.solve(gram, rhs)

    residuals = target - design @ coefficients
    ss_res = float(residuals @ residuals)
    return OLSFit(coefficients=coefficients, r_squared=1.0 - ss_res / ss_tot,
                  condition_flag=condition_flag)


def interdependence(run: PredictionRun, attribute: str) -> float:
    """R squared of predicting this attribute's scores from all the others'."""
    if len(run.attributes) < 2:
        raise ArgumentError("interdependence needs a run with at least 2 attributes")
    idx = run.attributes.index(attribute) if attribute in run.attributes else None
    if idx is None:
        raise ArgumentError(f"attribute {attribute!r} not in run {run.run_id!r}")
    mask = np.arange(len(run.attributes)) != idx
    return fit_ols(run.scores[:, mask], run.scores[:, idx]).r_squared
