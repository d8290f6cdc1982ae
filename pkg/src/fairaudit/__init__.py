"""Group-level fairness audits of bias mitigation methods."""
from fairaudit.data import (
    Dataset,
    DatasetSchema,
    FeatureEncoder,
    GroupAssignment,
    SplitConfig,
    assign_groups,
    load_dataset,
    load_recipe,
    load_schema,
    split,
)
from fairaudit.errors import (
    ConfigError,
    DataError,
    FairAuditError,
    MetricUndefined,
    MissingColumn,
    SchemaError,
    ScoreFileError,
    SplitMismatch,
)
from fairaudit.harness import ExperimentConfig, RunResults, load_config, run_experiment
from fairaudit.kernels import BACKEND
from fairaudit.metrics import MetricReport, PredictionSet, evaluate, group_rates
from fairaudit.model import Hyper, LogisticModel, fit_logistic, predict, predict_proba
from fairaudit.stats import classify_impact, cliffs_delta, mann_whitney_u, spearman, win_tie_loss

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DataError",
    "Dataset",
    "DatasetSchema",
    "ExperimentConfig",
    "FairAuditError",
    "FeatureEncoder",
    "GroupAssignment",
    "Hyper",
    "LogisticModel",
    "MetricReport",
    "MetricUndefined",
    "MissingColumn",
    "PredictionSet",
    "RunResults",
    "SchemaError",
    "ScoreFileError",
    "SplitConfig",
    "SplitMismatch",
    "assign_groups",
    "classify_impact",
    "cliffs_delta",
    "evaluate",
    "fit_logistic",
    "group_rates",
    "load_config",
    "load_dataset",
    "load_recipe",
    "load_schema",
    "mann_whitney_u",
    "predict",
    "predict_proba",
    "run_experiment",
    "spearman",
    "split",
    "win_tie_loss",
]
