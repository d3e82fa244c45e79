"""End-to-end workflow glue: split, train, predict, fit a correction on the
training (or validation) predictions, apply it to the test set, evaluate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .correction import CorrectionModel, apply_correction, fit_correction, select_family
from .data import Dataset, SplitSpec, split_dataset
from .errors import ValidationError
from .evaluation import EvaluationReport, evaluate
from .forest import ForestModel, ForestParams, predict_batch, train_forest
from .pure_forest import PureForestParams, train_pure_forest


@dataclass
class PipelineResult:
    train: Dataset
    validation: Dataset
    test: Dataset
    model: ForestModel
    fit_on: str
    predictions_fit: np.ndarray   # raw predictions on the correction-fitting set
    truths_fit: np.ndarray
    predictions_test: np.ndarray
    family: str                   # the family actually chosen
    corrections: dict[str, CorrectionModel] = field(default_factory=dict)
    corrected_test: dict[str, np.ndarray] = field(default_factory=dict)
    report_raw: Optional[EvaluationReport] = None
    reports_corrected: dict[str, EvaluationReport] = field(default_factory=dict)

    @property
    def truths_test(self) -> np.ndarray:
        return self.test.target


def run_pipeline(
    data: Dataset,
    split: SplitSpec,
    model_params: Union[ForestParams, PureForestParams],
    family: str = "logit",
    fit_on: str = "train",
    n_jobs: int = 1,
) -> PipelineResult:
    """Run the full workflow on one dataset.

    ``family`` may be any correction family or "auto" (lowest fitted SSE).
    The linear correction is always fitted alongside for comparison.
    ``fit_on`` chooses whether the correction is fitted on training-set or
    validation-set predictions.
    """
    if fit_on not in ("train", "validation"):
        raise ValidationError(f"fit_on must be 'train' or 'validation', got {fit_on!r}")
    train, validation, test = split_dataset(data, split)
    if fit_on == "validation" and validation.n_rows == 0:
        raise ValidationError(
            "fit_on='validation' requires a split with a nonzero validation fraction"
        )

    if isinstance(model_params, PureForestParams):
        model = train_pure_forest(train, model_params, n_jobs=n_jobs)
    else:
        model = train_forest(train, model_params, n_jobs=n_jobs)

    fit_set = train if fit_on == "train" else validation
    predictions_fit = predict_batch(model, fit_set)
    predictions_test = predict_batch(model, test)

    if family == "auto":
        chosen, chosen_model = select_family(predictions_fit, fit_set.target)
    else:
        chosen = family
        chosen_model = fit_correction(predictions_fit, fit_set.target, family)
    corrections = {chosen: chosen_model}
    if "linear" not in corrections:
        corrections["linear"] = fit_correction(predictions_fit, fit_set.target, "linear")

    corrected_test = {fam: apply_correction(m, predictions_test)
                      for fam, m in corrections.items()}
    report_raw = evaluate(predictions_test, test.target)
    reports_corrected = {fam: evaluate(vec, test.target)
                         for fam, vec in corrected_test.items()}
    return PipelineResult(
        train=train,
        validation=validation,
        test=test,
        model=model,
        fit_on=fit_on,
        predictions_fit=predictions_fit,
        truths_fit=fit_set.target,
        predictions_test=predictions_test,
        family=chosen,
        corrections=corrections,
        corrected_test=corrected_test,
        report_raw=report_raw,
        reports_corrected=reports_corrected,
    )
