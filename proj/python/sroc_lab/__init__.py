"""Anomaly detectors, metrics and training-set refinement on precomputed embeddings."""

from ._core import (
    Category,
    CategoryExcludedError,
    ConfigError,
    DataError,
    Detector,
    EmbeddingSet,
    au_iou,
    au_pro,
    exact_knn,
    fit,
    global_average_pool,
    largest_remainder,
    ledoit_wolf,
    load_category,
    pollution_plan,
    refine,
    refinement_prf,
    report_csv,
    roc_auc,
    run_sweep,
)

__all__ = [
    "Category",
    "CategoryExcludedError",
    "ConfigError",
    "DataError",
    "Detector",
    "EmbeddingSet",
    "au_iou",
    "au_pro",
    "exact_knn",
    "fit",
    "global_average_pool",
    "largest_remainder",
    "ledoit_wolf",
    "load_category",
    "pollution_plan",
    "refine",
    "refinement_prf",
    "report_csv",
    "roc_auc",
    "run_sweep",
]
