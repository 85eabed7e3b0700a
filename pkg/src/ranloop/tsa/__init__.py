"""Statistical time-series analysis: aggregation, change points, anomalies,
peer comparison, and deviation-table assembly."""

from ranloop.tsa.aggregate import AggregationRule, aggregate_series
from ranloop.tsa.anomaly import AnomalyFlag, AnomalyParams, detect_anomalies, robust_z_scores
from ranloop.tsa.changepoint import ChangePoint, ChangePointParams, detect_change_points
from ranloop.tsa.deviation import (
    DeviationRow,
    DeviationTable,
    TsaParams,
    build_deviation_table,
    severity_of,
)
from ranloop.tsa.peers import PeerOutlier, PeerScoreResult, score_peers
from ranloop.tsa.series import Series, fit_diurnal, remove_diurnal, robust_sigma

__all__ = [
    "AggregationRule",
    "AnomalyFlag",
    "AnomalyParams",
    "ChangePoint",
    "ChangePointParams",
    "DeviationRow",
    "DeviationTable",
    "PeerOutlier",
    "PeerScoreResult",
    "Series",
    "TsaParams",
    "aggregate_series",
    "build_deviation_table",
    "detect_anomalies",
    "detect_change_points",
    "fit_diurnal",
    "remove_diurnal",
    "robust_sigma",
    "robust_z_scores",
    "score_peers",
    "severity_of",
]
