"""Sparse linear and logistic regression by coordinate descent."""
from .data_model import (EncodedDataset, LinearModel, LogisticModel, WorkingSet, load_model,
                         predict_linear, predict_proba, save_model)
from .lasso import LassoConfig, soft_threshold
from .logreg import LogRegConfig

__all__ = [
    "EncodedDataset", "LinearModel", "LogisticModel", "WorkingSet", "LassoConfig", "LogRegConfig",
    "load_model", "save_model", "predict_linear", "predict_proba", "soft_threshold",
]
__version__ = "0.1.0"
