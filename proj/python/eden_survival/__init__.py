"""Survival-event detection in right-censored medical code sequences."""

from ._core import (
    Cohort,
    Model,
    __version__,
    adhoc_predict,
    auc,
    chain_rule,
    discount,
    extract_prediction,
    f1_acc,
    generate_cohort,
    hazards_from_event_rate,
    kaplan_meier,
    load_model,
    merge_consecutive,
    read_cohort,
    train,
    vocabulary,
)

__all__ = [
    "Cohort",
    "Model",
    "__version__",
    "adhoc_predict",
    "auc",
    "chain_rule",
    "discount",
    "extract_prediction",
    "f1_acc",
    "generate_cohort",
    "hazards_from_event_rate",
    "kaplan_meier",
    "load_model",
    "merge_consecutive",
    "read_cohort",
    "train",
    "vocabulary",
]
