"""Best-of-N trajectory selection with entropy centroids."""

from ._core import (
    Cache,
    Error,
    Hep,
    compute_centroid,
    compute_thresholds,
    detect_heps,
    entropy_from_topk,
    filter_outliers,
    method_accuracy,
    pass_at_1,
    raw_entropy_centroid,
    run_cli,
    scaling_curve,
    score,
    select,
    separation_stats,
)

__all__ = [
    "Cache",
    "Error",
    "Hep",
    "compute_centroid",
    "compute_thresholds",
    "detect_heps",
    "entropy_from_topk",
    "filter_outliers",
    "method_accuracy",
    "pass_at_1",
    "raw_entropy_centroid",
    "run_cli",
    "scaling_curve",
    "score",
    "select",
    "separation_stats",
]
