from .data import Dataset, split_train_test, stratified_folds
from .evaluation import EvalReport, confusion_matrix, evaluate, render_table
from .infogain import info_gain_ranking, information_gain
from .models import (
    TrainedModel,
    cross_validate,
    holdout,
    make_trainer,
    predict,
    train_decision_table,
    train_random_forest,
    train_random_subspace,
)

__all__ = [
    "Dataset", "split_train_test", "stratified_folds", "EvalReport", "confusion_matrix",
    "evaluate", "render_table", "info_gain_ranking", "information_gain", "TrainedModel",
    "cross_validate", "holdout", "make_trainer", "predict", "train_decision_table",
    "train_random_forest", "train_random_subspace",
]
