"""Imbalanced binary classification toolkit built around the ratio law.

Resampling, balanced-subset bagging ensembles, evaluation metrics, the
random-classifier F1 and AUPRC curves, t-tests and a cross-validated
experiment harness.
"""

from .balancing import (
    SmoteConfig,
    SubsetPlan,
    num_base_classifiers,
    oversample,
    plan_balanced_subsets,
    smote,
    undersample,
)
from .classifiers import DummyStrategy, LogisticConfig, LogisticRegression, dummy_predict
from .data import ClassCounts, Dataset, GeneratorConfig, generate_synthetic, load_csv, save_csv
from .ensemble import EnsembleModel, VoteSpec, hard_vote, soft_vote, train_ensemble
from .errors import ConfigError, DataError, NumericError, RatioLawError
from .experiments import ExperimentConfig, cross_validate, run_balancing_comparison, run_ratio_sweep
from .metrics import MetricsReport, auprc, auroc, evaluate
from .ratio_law import auprc_random, f1_random, fit_ratio_law
from .stats import paired_ttest, pearson, welch_ttest

__version__ = "0.1.0"

__all__ = [
    "ClassCounts", "ConfigError", "DataError", "Dataset", "DummyStrategy", "EnsembleModel",
    "ExperimentConfig", "GeneratorConfig", "LogisticConfig", "LogisticRegression",
    "MetricsReport", "NumericError", "RatioLawError", "SmoteConfig", "SubsetPlan", "VoteSpec",
    "auprc", "auprc_random", "auroc", "cross_validate", "dummy_predict", "evaluate",
    "f1_random", "fit_ratio_law", "generate_synthetic", "hard_vote", "load_csv",
    "num_base_classifiers", "oversample", "paired_ttest", "pearson", "plan_balanced_subsets",
    "run_balancing_comparison", "run_ratio_sweep", "save_csv", "smote", "soft_vote",
    "train_ensemble", "undersample", "welch_ttest",
]
