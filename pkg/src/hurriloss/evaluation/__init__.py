from .metrics import METRIC_NAMES, MetricSet, compute_metrics, mae, r2, rmse, rmsle, smape
from .protocol import (
    EvaluationReport,
    FoldError,
    FoldResult,
    format_table,
    holdout_evaluate,
    holdout_split,
    kfold_indices,
    repeated_kfold,
)
from .summary import SUMMARY_COLUMNS, export_zcta_summary, parse_zcta_summary, summary_rows

__all__ = [
    "METRIC_NAMES",
    "MetricSet",
    "compute_metrics",
    "mae",
    "r2",
    "rmse",
    "rmsle",
    "smape",
    "EvaluationReport",
    "FoldError",
    "FoldResult",
    "format_table",
    "holdout_evaluate",
    "holdout_split",
    "kfold_indices",
    "repeated_kfold",
    "SUMMARY_COLUMNS",
    "export_zcta_summary",
    "parse_zcta_summary",
    "summary_rows",
]
