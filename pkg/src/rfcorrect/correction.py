"""Bias-correction curves: fit a 4-parameter logit (or sinh/tan/linear)
transform on (raw prediction, ground truth) pairs and apply it to new
predictions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateDataError, DomainError, ValidationError
from .linear import solve_least_squares

log = logging.getLogger(__name__)

FAMILIES = ("linear", "logit", "sinh", "tan")

# Tie preference when several families reach the same SSE.
_FAMILY_PREFERENCE = ("logit", "sinh", "tan", "linear")

# Application-time clamp margin: x is pulled this fraction of `a` inside the
# logit domain boundary (and this absolute amount inside pi/2 for tan).
CLAMP_EPS = 1e-6

# During fitting, a point outside the open domain contributes a residual of
# PENALTY_RATE times its distance outside, pushing (a, b) to cover the data.
PENALTY_RATE = 1e6

_LM_MAX_ITER = 500
_LM_REL_TOL = 1e-10
_FD_REL_STEP = 1e-6


def logistic_shifted(x):
    """Classic logistic curve shifted to pass through the origin:
    1/(1 + e^-x) - 1/2.  Odd, saturating at +-1/2."""
    arr = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        out = 1.0 / (1.0 + np.exp(-arr)) - 0.5
    return float(out) if np.isscalar(x) else out


def logit_core(x):
    """Inverse of logistic_shifted: -log(1/(x + 1/2) - 1), defined on the
    open interval (-1/2, 1/2)."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= -0.5) or np.any(arr >= 0.5):
        raise DomainError("logit_core is defined only on the open interval (-1/2, 1/2)")
    out = -np.log(1.0 / (arr + 0.5) - 1.0)
    return float(out) if np.isscalar(x) else out


@dataclass(frozen=True)
class CorrectionModel:
    """A fitted correction map y = family((x - b)/a) scaled by d, offset by c.

    x_min/x_max record the prediction range seen while fitting; for the
    logit family the open domain (b - a/2, b + a/2) must contain it.
    """

    family: str
    a: float
    b: float
    c: float
    d: float
    fit_sse: float
    n_points: int
    x_min: float
    x_max: float
    converged: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown correction family {self.family!r}")
        if not self.a > 0:
            raise ValidationError(f"a: must be > 0, got {self.a}")
        if self.fit_sse < 0:
            raise ValidationError(f"fit_sse: must be >= 0, got {self.fit_sse}")
        if self.x_min > self.x_max:
            raise ValidationError(f"x_min {self.x_min} exceeds x_max {self.x_max}")
        if self.family == "logit" and not _logit_domain_covers(
            self.a, self.b, self.x_min, self.x_max
        ):
            raise ValidationError(
                "logit domain (b - a/2, b + a/2) does not cover the fitted prediction range"
            )


def _logit_domain_covers(a: float, b: float, x_min: float, x_max: float) -> bool:
    return (b - a / 2.0) < x_min and x_max < (b + a / 2.0)


def _clamp_u(family: str, u: np.ndarray) -> np.ndarray:
    if family == "logit":
        return np.clip(u, -0.5 + CLAMP_EPS, 0.5 - CLAMP_EPS)
    if family == "tan":
        bound = math.pi / 2.0 - CLAMP_EPS
        return np.clip(u, -bound, bound)
    return u


def _curve(family: str, u: np.ndarray, d: float, c: float) -> np.ndarray:
    if family == "linear":
        return d * u + c
    if family == "logit":
        return -d * np.log(1.0 / (u + 0.5) - 1.0) + c
    if family == "sinh":
        return d * np.sinh(u) + c
    return d * np.tan(u) + c


def evaluate_curve(model: CorrectionModel, xs) -> np.ndarray:
    """Vectorized eval_correction; x is clamped to the family's safe domain."""
    xs = np.asarray(xs, dtype=np.float64)
    u = _clamp_u(model.family, (xs - model.b) / model.a)
    return _curve(model.family, u, model.d, model.c)


def eval_correction(model: CorrectionModel, x: float) -> float:
    return float(evaluate_curve(model, np.asarray([x]))[0])


def apply_correction(model: CorrectionModel, predictions) -> np.ndarray:
    """Element-wise correction, order preserved; empty in, empty out."""
    preds = np.asarray(predictions, dtype=np.float64).reshape(-1)
    if preds.size == 0:
        return np.empty(0)
    return evaluate_curve(model, preds)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _deployed_sse(family, a, b, c, d, x, y) -> float:
    model_u = _clamp_u(family, (x - b) / a)
    with np.errstate(over="ignore", invalid="ignore"):
        values = _curve(family, model_u, d, c)
    if not np.isfinite(values).all():
        return math.inf
    return float(((values - y) ** 2).sum())


def _penalized_residuals(family: str, theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Residual vector for the optimizer; theta = (log a, b, c, d).

    Points outside the open logit/tan domain contribute PENALTY_RATE times
    their distance (in x units) outside it instead of an undefined value.
    """
    alpha, b, c, d = theta
    a = math.exp(alpha)
    u = (x - b) / a
    if family in ("logit", "tan"):
        bound = 0.5 if family == "logit" else math.pi / 2.0
        bound -= 1e-9
        outside = np.abs(u) >= bound
        r = np.empty_like(u)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            r[~outside] = _curve(family, u[~outside], d, c) - y[~outside]
        r[outside] = PENALTY_RATE * (np.abs(u[outside]) - bound) * a
        return r
    with np.errstate(over="ignore", invalid="ignore"):
        return _curve(family, u, d, c) - y


def _lm_minimize(family: str, theta0, x, y) -> tuple[np.ndarray, bool]:
    """Damped iterative least squares with forward finite differences.

    a = exp(alpha) keeps the x-scale positive.  Stops on relative SSE
    improvement below _LM_REL_TOL or a stalled damping search; exhausting
    the iteration budget returns converged=False.
    """
    theta = np.asarray(theta0, dtype=np.float64)
    r = _penalized_residuals(family, theta, x, y)
    sse = float(r @ r)
    if not math.isfinite(sse):
        return theta, False
    lam = 1e-3
    for _ in range(_LM_MAX_ITER):
        jac = np.empty((x.shape[0], 4))
        for k in range(4):
            h = _FD_REL_STEP * max(abs(theta[k]), 1.0)
            probe = theta.copy()
            probe[k] += h
            jac[:, k] = (_penalized_residuals(family, probe, x, y) - r) / h
        grad = jac.T @ r
        hess = jac.T @ jac
        damp = np.diag(hess).copy()
        damp[damp <= 0] = 1e-12
        accepted = False
        while lam < 1e14:
            try:
                step = np.linalg.solve(hess + lam * np.diag(damp), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = theta + step
            r_new = _penalized_residuals(family, candidate, x, y)
            sse_new = float(r_new @ r_new)
            if math.isfinite(sse_new) and sse_new < sse:
                theta, r = candidate, r_new
                improvement = sse - sse_new
                sse = sse_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            return theta, True  # stalled at a local minimum
        if improvement <= _LM_REL_TOL * max(sse, 1e-300):
            return theta, True
    return theta, False


def _center_slope_d(family: str, slope: float, a: float) -> float:
    # dy/dx at the curve center is 4d/a for logit, d/a for sinh/tan.
    return slope * a / 4.0 if family == "logit" else slope * a


def _near_linear_params(family, slope, intercept, center, span, scale):
    a = scale * span
    d = _center_slope_d(family, slope, a)
    c = slope * center + intercept
    return a, center, c, d


def _starting_points(family, x, y, slope, intercept):
    span = float(x.max() - x.min())
    center = float((x.max() + x.min()) / 2.0)
    starts = []
    # (i) identity-like: large a, d matched to the OLS slope
    a0 = 10.0 * span
    starts.append((a0, center, slope * center + intercept, _center_slope_d(family, slope, a0)))
    # (ii) data-scaled, (iii) the same with a halved
    for a0 in (1.2 * span, 0.6 * span):
        starts.append((a0, float(np.median(x)), float(y.mean()),
                       _center_slope_d(family, slope, a0)))
    return [np.array([math.log(a), b, c, d]) for a, b, c, d in starts]


def _fit_line_1d(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    design = np.column_stack([np.ones(x.shape[0]), x])
    beta = solve_least_squares(design, y, ["intercept", "prediction"])
    return float(beta[1]), float(beta[0])


def _validate_fit_inputs(predictions, truths) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(predictions, dtype=np.float64).reshape(-1)
    y = np.asarray(truths, dtype=np.float64).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ValidationError(f"length mismatch: {x.shape[0]} predictions vs {y.shape[0]} truths")
    if x.shape[0] == 0:
        raise ValidationError("empty input")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValidationError("inputs contain NaN or infinite values")
    if x.max() == x.min():
        raise DegenerateDataError("cannot fit a correction: predictions are all identical")
    return x, y


def fit_correction(predictions, truths, family: str = "logit") -> CorrectionModel:
    """Least-squares fit of the chosen family over (a, b, c, d).

    The linear family is solved in closed form.  The nonlinear families run
    the damped least-squares optimizer from three starting points; if no
    run beats the straight line, a near-linear member of the family (large
    a) is returned instead, so every family's SSE is at most a hair above
    the linear one.
    """
    if family not in FAMILIES:
        raise ValidationError(f"unknown correction family {family!r}")
    x, y = _validate_fit_inputs(predictions, truths)
    x_min, x_max = float(x.min()), float(x.max())
    slope, intercept = _fit_line_1d(x, y)
    linear_sse = _deployed_sse("linear", 1.0, 0.0, intercept, slope, x, y)
    if family == "linear":
        return CorrectionModel("linear", 1.0, 0.0, intercept, slope,
                               fit_sse=linear_sse, n_points=x.shape[0],
                               x_min=x_min, x_max=x_max)

    candidates = []  # (sse, a, b, c, d, converged)
    for theta0 in _starting_points(family, x, y, slope, intercept):
        theta, converged = _lm_minimize(family, theta0, x, y)
        a, b, c, d = math.exp(theta[0]), theta[1], theta[2], theta[3]
        if not all(map(math.isfinite, (a, b, c, d))):
            continue
        if family == "logit" and not _logit_domain_covers(a, b, x_min, x_max):
            continue
        candidates.append((_deployed_sse(family, a, b, c, d, x, y), a, b, c, d, converged))

    best = min(candidates) if candidates else None
    if best is None or best[0] > linear_sse:
        span = x_max - x_min
        center = (x_max + x_min) / 2.0
        fallback = []
        for scale in (1e2, 1e3, 1e4, 1e5, 1e6):
            a, b, c, d = _near_linear_params(family, slope, intercept, center, span, scale)
            fallback.append((_deployed_sse(family, a, b, c, d, x, y), a, b, c, d, True))
        best = min(fallback + ([best] if best else []))

    sse, a, b, c, d, converged = best
    if not converged:
        log.warning("correction fit (%s) hit the iteration budget; returning best found", family)
    return CorrectionModel(family, a, b, c, d, fit_sse=sse, n_points=x.shape[0],
                           x_min=x_min, x_max=x_max, converged=converged)


def fit_all_families(predictions, truths) -> dict[str, CorrectionModel]:
    """Fit every family that fits; raises only if all of them fail."""
    fits: dict[str, CorrectionModel] = {}
    last_error = None
    for fam in FAMILIES:
        try:
            fits[fam] = fit_correction(predictions, truths, fam)
        except (ValidationError, DegenerateDataError) as exc:
            last_error = exc
    if not fits:
        raise last_error
    return fits


def select_family(predictions, truths) -> tuple[str, CorrectionModel]:
    """Fit all four families and return the lowest-SSE one; ties (relative
    to the data's total sum of squares) prefer logit > sinh > tan > linear."""
    fits = fit_all_families(predictions, truths)
    y = np.asarray(truths, dtype=np.float64).reshape(-1)
    tss = float(((y - y.mean()) ** 2).sum())
    sse_min = min(m.fit_sse for m in fits.values())
    tol = 1e-12 * max(sse_min, tss)
    for fam in _FAMILY_PREFERENCE:
        if fam in fits and fits[fam].fit_sse <= sse_min + tol:
            return fam, fits[fam]
    raise AssertionError("unreachable: the minimal-SSE family always ties with itself")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

CORRECTION_SCHEMA_VERSION = 1


def correction_to_dict(model: CorrectionModel) -> dict:
    return {
        "schema_version": CORRECTION_SCHEMA_VERSION,
        "family": model.family,
        "a": float(model.a),
        "b": float(model.b),
        "c": float(model.c),
        "d": float(model.d),
        "fit_sse": float(model.fit_sse),
        "n_points": int(model.n_points),
        "x_min": float(model.x_min),
        "x_max": float(model.x_max),
        "converged": bool(model.converged),
    }


def correction_from_dict(payload: dict) -> CorrectionModel:
    if payload.get("schema_version") != CORRECTION_SCHEMA_VERSION:
        raise ValidationError(f"unsupported correction schema {payload.get('schema_version')!r}")
    return CorrectionModel(
        family=payload["family"], a=payload["a"], b=payload["b"], c=payload["c"],
        d=payload["d"], fit_sse=payload["fit_sse"], n_points=payload["n_points"],
        x_min=payload["x_min"], x_max=payload["x_max"], converged=payload["converged"],
    )
