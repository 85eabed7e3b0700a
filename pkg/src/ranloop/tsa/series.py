"""Series container and shared robust-statistics helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DAY_S = 86400

# Floor applied where a MAD of zero would otherwise divide out: keeps constant
# windows at z == 0 instead of raising.
def mad_floor(center: float) -> float:
    return 1e-9 * abs(center) + 1e-12


@dataclass(frozen=True)
class Series:
    timestamps: np.ndarray  # int seconds, strictly increasing
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_points(cls, points: list[tuple[int, float]]) -> "Series":
        if not points:
            return cls(np.array([], dtype=np.int64), np.array([], dtype=float))
        ts = np.array([t for t, _ in points], dtype=np.int64)
        vs = np.array([v for _, v in points], dtype=float)
        return cls(ts, vs)

    def points(self) -> list[tuple[int, float]]:
        return [(int(t), float(v)) for t, v in zip(self.timestamps, self.values)]

    def slice_window(self, start: int, end: int) -> "Series":
        mask = (self.timestamps >= start) & (self.timestamps < end)
        return Series(self.timestamps[mask], self.values[mask])


def fit_diurnal(series: Series) -> np.ndarray:
    """Least-squares fit of mean + one 24h sinusoid; returns the fitted curve."""
    n = len(series)
    if n < 3:
        return np.full(n, series.values.mean() if n else 0.0)
    phase = 2 * np.pi * series.timestamps.astype(float) / DAY_S
    basis = np.column_stack([np.ones(n), np.sin(phase), np.cos(phase)])
    coef, *_ = np.linalg.lstsq(basis, series.values, rcond=None)
    return basis @ coef


def remove_diurnal(series: Series, keep_level: bool = False) -> np.ndarray:
    """Residuals after the diurnal fit; with keep_level the fitted mean stays in."""
    fitted = fit_diurnal(series)
    resid = series.values - fitted
    if keep_level and len(series) >= 3:
        resid = resid + float(np.mean(fitted))
    return resid


def robust_sigma(resid: np.ndarray) -> float:
    """Noise scale from first differences: robust to level shifts in the series."""
    if len(resid) < 2:
        return 0.0
    d = np.abs(np.diff(resid))
    return float(1.4826 * np.median(d) / np.sqrt(2.0))
