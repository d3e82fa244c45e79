"""Ordinary least-squares regression, the line-fitting primitive for the whole package."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .data import Dataset
from .errors import RankDeficiencyError, SchemaError, ValidationError

# Rank tolerance, relative to the largest |R| diagonal of the QR factor.
RANK_RTOL = 1e-10


def solve_least_squares(design: np.ndarray, y: np.ndarray, column_names) -> np.ndarray:
    """Minimum-SSE coefficients of ``design @ beta = y`` via a QR factorization.

    Raises RankDeficiencyError naming the dependent column(s) when any |R|
    diagonal falls below RANK_RTOL times the largest one.
    """
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    tol = RANK_RTOL * diag.max() if diag.size else 0.0
    bad = np.flatnonzero(diag <= tol)
    if bad.size:
        raise RankDeficiencyError([column_names[i] for i in bad])
    return solve_triangular(r, q.T @ y)


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.float64).reshape(-1)
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "intercept", float(self.intercept))


def fit_ols(data: Dataset) -> LinearModel:
    """Least-squares fit of target on features plus an intercept column."""
    n, p = data.n_rows, data.n_features
    if n < p + 1:
        raise ValidationError(f"need at least {p + 1} rows to fit {p} features, got {n}")
    design = np.column_stack([np.ones(n), data.features])
    names = ["intercept"] + list(data.feature_names)
    beta = solve_least_squares(design, data.target, names)
    return LinearModel(intercept=beta[0], coefficients=beta[1:])


def predict_linear(model: LinearModel, feature_row) -> float:
    row = np.asarray(feature_row, dtype=np.float64).reshape(-1)
    if row.shape[0] != model.coefficients.shape[0]:
        raise SchemaError(
            f"feature row has {row.shape[0]} values, model expects {model.coefficients.shape[0]}"
        )
    return float(model.intercept + row @ model.coefficients)


def predict_linear_batch(model: LinearModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.coefficients.shape[0]:
        raise SchemaError(
            f"feature matrix shape {features.shape} does not match "
            f"{model.coefficients.shape[0]} model coefficients"
        )
    return model.intercept + features @ model.coefficients
