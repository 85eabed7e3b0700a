"""Transient-anomaly detection: robust z against a trailing median/MAD window.

robust_z = (value - rolling median) / (1.4826 * rolling MAD), with a floor
substituted when the window is constant (MAD = 0), so constant series score
zero instead of dividing out. Operates on the values exactly as given; any
diurnal adjustment is the caller's choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ranloop.errors import ValidationError
from ranloop.tsa.series import Series, mad_floor


@dataclass(frozen=True)
class AnomalyFlag:
    element_id: str
    level: str
    kpi: str
    timestamp: int
    robust_z: float
    value: float


@dataclass(frozen=True)
class AnomalyParams:
    # Robust z against a 24-point-ish window has noticeably heavier tails than
    # N(0,1) (the MAD estimate is itself noisy). Defaults of window 48 and
    # threshold 6 keep the stationary false-flag rate near 1 per 100k samples.
    threshold: float = 6.0
    window: int = 48

    def __post_init__(self):
        if self.window < 12:
            raise ValidationError("anomaly window must be >= 12 intervals", field_path="window")


def robust_z_scores(values: np.ndarray, window: int) -> np.ndarray:
    """Scores for indices window..n-1 (earlier points have no full window)."""
    n = len(values)
    if n <= window:
        return np.array([])
    view = np.lib.stride_tricks.sliding_window_view(values, window)[:-1]
    med = np.median(view, axis=1)
    mad = np.median(np.abs(view - med[:, None]), axis=1)
    denom = 1.4826 * mad
    floor = np.array([mad_floor(m) for m in med])
    denom = np.where(mad == 0.0, floor, denom)
    return (values[window:] - med) / denom


def detect_anomalies(
    series: Series,
    params: AnomalyParams = AnomalyParams(),
    element_id: str = "",
    level: str = "cell",
    kpi: str = "",
) -> list[AnomalyFlag]:
    n = len(series)
    if n < params.window:
        raise ValidationError(
            f"series shorter than anomaly window: {n} < {params.window} points"
        )
    z = robust_z_scores(series.values, params.window)
    out: list[AnomalyFlag] = []
    for i in np.nonzero(np.abs(z) >= params.threshold)[0]:
        idx = int(i) + params.window
        out.append(
            AnomalyFlag(
                element_id=element_id,
                level=level,
                kpi=kpi,
                timestamp=int(series.timestamps[idx]),
                robust_z=float(z[i]),
                value=float(series.values[idx]),
            )
        )
    return out
