"""Sustained-shift detection: two-sided CUSUM on diurnal-adjusted residuals.

The scan raises a candidate when either one-sided CUSUM statistic crosses the
threshold; the candidate onset is the start of the triggering excursion,
polished by a local least-squares split, and must pass a two-sample mean test
before being reported (keeps stationary false alarms far below the one-per-10k
target). After a confirmed shift the scan restarts with a fresh reference, so
multiple shifts in one series are reported in order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ranloop.errors import ValidationError
from ranloop.tsa.series import Series, fit_diurnal, robust_sigma


@dataclass(frozen=True)
class ChangePoint:
    element_id: str
    level: str
    kpi: str
    onset: int  # timestamp
    direction: str  # up | down
    magnitude: float  # post-mean - pre-mean, KPI units
    score: float  # CUSUM statistic at alarm, sigma units
    pre_mean: float
    post_mean: float
    sigma: float  # robust noise scale used by the detector


@dataclass(frozen=True)
class ChangePointParams:
    min_segment: int = 8
    threshold_sigmas: float = 5.0
    drift_sigmas: float = 0.5
    confirm_sigmas: float = 6.0
    remove_diurnal: bool = True


def detect_change_points(
    series: Series,
    params: ChangePointParams = ChangePointParams(),
    element_id: str = "",
    level: str = "cell",
    kpi: str = "",
) -> list[ChangePoint]:
    n = len(series)
    m = params.min_segment
    if n < 2 * m:
        raise ValidationError(
            f"series too short for change detection: {n} < {2 * m} points"
        )

    if params.remove_diurnal:
        fitted = fit_diurnal(series)
        resid = series.values - fitted
        level_curve = fitted
    else:
        resid = series.values.astype(float)
        level_curve = np.zeros(n)

    sigma = robust_sigma(resid)
    if sigma == 0.0:
        if np.all(resid == resid[0]):
            return []  # constant series: nothing to detect
        sigma = 1e-9 * max(1.0, float(np.abs(resid).max()))

    out: list[ChangePoint] = []
    seg_start = 0
    while n - seg_start >= 2 * m:
        hit = _cusum_scan(resid, seg_start, n, sigma, params)
        if hit is None:
            break
        alarm_idx, candidate, g_score = hit
        # The shift lies between the excursion start and the alarm; search a
        # margin beyond both ends for the least-squares split.
        onset = _refine_onset(resid, seg_start, n, candidate - m, alarm_idx + m)
        pre_lo = max(seg_start, onset - m)
        post_hi = min(n, onset + m)
        pre = resid[pre_lo:onset]
        post = resid[onset:post_hi]
        if len(pre) == 0 or len(post) == 0:
            seg_start = alarm_idx + 1
            continue
        pre_mean = float(pre.mean())
        post_mean = float(post.mean())
        stat = abs(post_mean - pre_mean) / (sigma * np.sqrt(1.0 / len(pre) + 1.0 / len(post)))
        if stat < params.confirm_sigmas:
            seg_start = alarm_idx + 1  # unconfirmed excursion: skip past it
            continue
        magnitude = post_mean - pre_mean
        base_level = float(level_curve[onset])
        out.append(
            ChangePoint(
                element_id=element_id,
                level=level,
                kpi=kpi,
                onset=int(series.timestamps[onset]),
                direction="up" if magnitude > 0 else "down",
                magnitude=magnitude,
                score=float(g_score),
                pre_mean=pre_mean + base_level,
                post_mean=post_mean + base_level,
                sigma=sigma,
            )
        )
        seg_start = onset
    return out


def _cusum_scan(resid, a, b, sigma, params):
    """First threshold crossing in segment [a, b).

    Returns (alarm index, excursion-start index, statistic at alarm), indices
    absolute into the series, or None. Reference level is the mean of the
    segment's first min_segment samples; scan starts after them.
    """
    m = params.min_segment
    ref = float(resid[a : a + m].mean())
    z = (resid[a + m : b] - ref) / sigma
    if len(z) == 0:
        return None

    up = _one_sided_alarm(z, params.drift_sigmas, params.threshold_sigmas)
    down = _one_sided_alarm(-z, params.drift_sigmas, params.threshold_sigmas)
    best = None
    for cand in (up, down):
        if cand is None:
            continue
        alarm_rel, start_rel, g_val = cand
        absolute = (a + m + alarm_rel, a + m + start_rel, g_val)
        if best is None or absolute[0] < best[0]:
            best = absolute
    return best


def _one_sided_alarm(z, drift, threshold):
    """First crossing of the one-sided CUSUM g_t = max(0, g_{t-1} + z_t - k).

    Computed via the cumulative-sum identity g_t = S_t - min_{j<=t} S_j.
    Returns (alarm index, excursion-start index, g at alarm) relative to z.
    """
    s = z - drift
    big_s = np.concatenate([[0.0], np.cumsum(s)])
    running_min = np.minimum.accumulate(big_s)
    g = big_s - running_min
    crossing = np.nonzero(g[1:] > threshold)[0]
    if len(crossing) == 0:
        return None
    t_alarm = int(crossing[0]) + 1  # index into big_s
    start = int(np.nonzero(big_s[: t_alarm + 1] == running_min[t_alarm])[0][-1])
    return t_alarm - 1, start, float(g[t_alarm])


def _refine_onset(resid, seg_start, seg_end, lo_idx, hi_idx):
    """Least-squares single-split estimate inside [lo_idx, hi_idx)."""
    lo = max(seg_start, lo_idx)
    hi = min(seg_end, hi_idx)
    x = resid[lo:hi]
    n = len(x)
    if n < 4:
        return max(seg_start + 1, lo_idx)
    prefix = np.concatenate([[0.0], np.cumsum(x)])
    prefix_sq = np.concatenate([[0.0], np.cumsum(x * x)])
    splits = np.arange(1, n)
    n1 = splits.astype(float)
    n2 = (n - splits).astype(float)
    sum1 = prefix[splits]
    sum2 = prefix[n] - sum1
    sse = (prefix_sq[splits] - sum1 * sum1 / n1) + (
        (prefix_sq[n] - prefix_sq[splits]) - sum2 * sum2 / n2
    )
    return lo + int(splits[np.argmin(sse)])
