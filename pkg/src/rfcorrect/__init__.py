"""Random-forest regression with diagnosis and correction of the systematic
toward-the-mean bias in its predictions."""

from .correction import (
    CorrectionModel,
    apply_correction,
    eval_correction,
    fit_correction,
    logistic_shifted,
    logit_core,
    select_family,
)
from .data import (
    Dataset,
    RngStream,
    SplitSpec,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    save_dataset_csv,
    split_dataset,
)
from .errors import (
    DegenerateDataError,
    DomainError,
    EmptyDataError,
    MissingColumnError,
    RankDeficiencyError,
    RfcorrectError,
    SchemaError,
    ValidationError,
)
from .evaluation import (
    EvaluationReport,
    RunsTestResult,
    evaluate,
    fit_line,
    linearized_residuals,
    mse,
    runs_test,
)
from .forest import (
    ForestModel,
    ForestParams,
    Leaf,
    Split,
    best_split,
    predict,
    predict_batch,
    train_forest,
)
from .linear import LinearModel, fit_ols, predict_linear
from .model_io import load_model, model_from_dict, model_to_dict, save_model
from .pipeline import PipelineResult, run_pipeline
from .pure_forest import PureForestParams, random_split, train_pure_forest

__version__ = "0.1.0"
