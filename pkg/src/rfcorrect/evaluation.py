"""Model-quality and bias diagnostics: MSE, truth-vs-prediction line fits,
linearized residuals, the one-tailed Wald-Wolfowitz runs test, and reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Dataset
from .errors import DegenerateDataError, ValidationError
from .linear import fit_ols

# Largest sample size for which the exact combinatorial p-value is used;
# beyond it the normal approximation takes over.
EXACT_MAX_N = 20


def mse(predictions, truths) -> float:
    """Mean squared error between two equal-length vectors."""
    p, t = _paired(predictions, truths)
    return float(np.mean((p - t) ** 2))


def _paired(predictions, truths) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    t = np.asarray(truths, dtype=np.float64).reshape(-1)
    if p.shape[0] != t.shape[0]:
        raise ValidationError(f"length mismatch: {p.shape[0]} predictions vs {t.shape[0]} truths")
    if p.shape[0] == 0:
        raise ValidationError("empty input")
    return p, t


def fit_line(predictions, truths) -> tuple[float, float]:
    """OLS fit of truth on prediction; returns (slope, intercept)."""
    p, t = _paired(predictions, truths)
    if np.unique(p).shape[0] < 2:
        raise DegenerateDataError("cannot fit a line: predictions are constant")
    model = fit_ols(Dataset(p[:, None], t, ("prediction",)))
    return float(model.coefficients[0]), model.intercept


def linearized_residuals(predictions, truths) -> np.ndarray:
    """Residuals from the truth-on-prediction line, ordered by ascending
    prediction (ties keep original index order)."""
    p, t = _paired(predictions, truths)
    slope, intercept = fit_line(p, t)
    residuals = t - (slope * p + intercept)
    order = np.argsort(p, kind="stable")
    return residuals[order]


@dataclass(frozen=True)
class RunsTestResult:
    n_pos: int
    n_neg: int
    runs: int
    z: float
    p_one_tailed: float
    method: str  # "exact" | "normal_approx"


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _exact_runs_cdf(n_pos: int, n_neg: int, runs: int) -> float:
    """P(runs <= observed) under random arrangement, by counting arrangements
    with r runs: even r=2k has 2*C(n+-1,k-1)*C(n--1,k-1) of them; odd
    r=2k+1 has C(n+-1,k)*C(n--1,k-1) + C(n+-1,k-1)*C(n--1,k)."""
    total = math.comb(n_pos + n_neg, n_pos)
    count = 0
    for r in range(2, runs + 1):
        if r % 2 == 0:
            k = r // 2
            count += 2 * math.comb(n_pos - 1, k - 1) * math.comb(n_neg - 1, k - 1)
        else:
            k = (r - 1) // 2
            count += math.comb(n_pos - 1, k) * math.comb(n_neg - 1, k - 1)
            count += math.comb(n_pos - 1, k - 1) * math.comb(n_neg - 1, k)
    return count / total


def runs_test(signs) -> RunsTestResult:
    """One-tailed Wald-Wolfowitz runs test on an ordered +-1 sign sequence.

    The alternative is clustering (too few runs), so p = P(runs <= observed)
    under the null of random arrangement: exact by combinatorial counting
    for n <= EXACT_MAX_N, else the normal approximation.
    """
    s = np.sign(np.asarray(signs, dtype=np.float64).reshape(-1))
    if (s == 0).any():
        raise ValidationError("signs must be strictly positive or negative (drop zeros first)")
    n_pos = int((s > 0).sum())
    n_neg = int((s < 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("runs test undefined: all signs are identical")
    n = n_pos + n_neg
    runs = int(1 + (s[1:] != s[:-1]).sum())
    mu = 1.0 + 2.0 * n_pos * n_neg / n
    var = 2.0 * n_pos * n_neg * (2.0 * n_pos * n_neg - n) / (n * n * (n - 1.0))
    z = (runs - mu) / math.sqrt(var)
    if n <= EXACT_MAX_N:
        p = _exact_runs_cdf(n_pos, n_neg, runs)
        method = "exact"
    else:
        p = _normal_cdf(z)
        method = "normal_approx"
    return RunsTestResult(n_pos=n_pos, n_neg=n_neg, runs=runs, z=float(z),
                          p_one_tailed=float(p), method=method)


@dataclass(frozen=True)
class EvaluationReport:
    mse: float
    slope: float
    intercept: float
    runs_test: Optional[RunsTestResult]
    truth_range: tuple[float, float]
    prediction_range: tuple[float, float]
    n: int


def evaluate(predictions, truths) -> EvaluationReport:
    """Assemble MSE, truth-on-prediction line, runs test over linearized
    residual signs, and both value ranges.

    A degenerate runs test (all residuals zero, or one sign) is reported as
    None rather than failing the evaluation.
    """
    p, t = _paired(predictions, truths)
    if p.shape[0] < 3:
        raise ValidationError(f"need at least 3 points to evaluate, got {p.shape[0]}")
    slope, intercept = fit_line(p, t)
    residuals = linearized_residuals(p, t)
    signs = np.sign(residuals)
    signs = signs[signs != 0]
    try:
        rt = runs_test(signs) if signs.size else None
    except DegenerateDataError:
        rt = None
    return EvaluationReport(
        mse=mse(p, t),
        slope=slope,
        intercept=intercept,
        runs_test=rt,
        truth_range=(float(t.min()), float(t.max())),
        prediction_range=(float(p.min()), float(p.max())),
        n=int(p.shape[0]),
    )


def report_to_dict(report: EvaluationReport) -> dict:
    rt = report.runs_test
    return {
        "n": report.n,
        "mse": report.mse,
        "slope": report.slope,
        "intercept": report.intercept,
        "truth_range": list(report.truth_range),
        "prediction_range": list(report.prediction_range),
        "runs_test": None if rt is None else {
            "n_pos": rt.n_pos,
            "n_neg": rt.n_neg,
            "runs": rt.runs,
            "z": rt.z,
            "p_one_tailed": rt.p_one_tailed,
            "method": rt.method,
        },
    }


def report_from_dict(payload: dict) -> EvaluationReport:
    rt = payload.get("runs_test")
    return EvaluationReport(
        mse=payload["mse"],
        slope=payload["slope"],
        intercept=payload["intercept"],
        runs_test=None if rt is None else RunsTestResult(**rt),
        truth_range=tuple(payload["truth_range"]),
        prediction_range=tuple(payload["prediction_range"]),
        n=payload["n"],
    )


CSV_REPORT_FIELDS = (
    "label", "n", "mse", "slope", "intercept",
    "runs", "runs_z", "runs_p_one_tailed", "runs_method",
    "truth_min", "truth_max", "prediction_min", "prediction_max",
)


def report_csv_row(report: EvaluationReport, label: str = "") -> list:
    """The report flattened to one row matching CSV_REPORT_FIELDS."""
    rt = report.runs_test
    return [
        label, report.n, report.mse, report.slope, report.intercept,
        rt.runs if rt else "", rt.z if rt else "",
        rt.p_one_tailed if rt else "", rt.method if rt else "",
        report.truth_range[0], report.truth_range[1],
        report.prediction_range[0], report.prediction_range[1],
    ]
