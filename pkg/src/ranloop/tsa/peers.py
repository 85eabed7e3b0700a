"""Peer comparison: flag elements whose windowed median sits far from the group.

Scores use diurnal-adjusted medians (sinusoid removed, level kept) so daily
cycles shared by a peer group do not mask level asymmetries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ranloop.tsa.series import Series, mad_floor, remove_diurnal, robust_sigma


@dataclass(frozen=True)
class PeerOutlier:
    element_id: str
    level: str
    kpi: str
    window: tuple[int, int]
    outlier_score: float
    peer_group: str


@dataclass
class PeerScoreResult:
    outliers: list[PeerOutlier] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def score_peers(
    peer_series: dict[str, Series],
    window: tuple[int, int],
    threshold: float = 5.0,
    level: str = "cell",
    kpi: str = "",
    peer_group: str = "",
) -> PeerScoreResult:
    result = PeerScoreResult()
    if len(peer_series) < 3:
        result.warnings.append(
            f"peer group {peer_group or '?'} has {len(peer_series)} members; "
            "need >= 3 for outlier scoring"
        )
        return result

    medians: dict[str, float] = {}
    noise_floors: list[float] = []
    for el, s in sorted(peer_series.items()):
        clipped = s.slice_window(*window)
        if len(clipped) == 0:
            continue
        adjusted = remove_diurnal(clipped, keep_level=True)
        medians[el] = float(np.median(adjusted))
        # sampling noise of a median of n points: ~1.2533 sigma / sqrt(n)
        noise_floors.append(1.2533 * robust_sigma(adjusted) / np.sqrt(len(adjusted)))
    if len(medians) < 3:
        result.warnings.append(
            f"peer group {peer_group or '?'} has {len(medians)} populated series in window"
        )
        return result

    values = np.array(list(medians.values()))
    center = float(np.median(values))
    mad = float(np.median(np.abs(values - center)))
    # Spread can't meaningfully drop below the medians' own sampling noise;
    # without the floor, small peer groups whose medians agree by luck would
    # score unbounded ratios.
    spread = max(1.4826 * mad, float(np.median(noise_floors)), mad_floor(center))
    scored = [
        PeerOutlier(
            element_id=el,
            level=level,
            kpi=kpi,
            window=window,
            outlier_score=abs(m - center) / spread,
            peer_group=peer_group,
        )
        for el, m in medians.items()
    ]
    result.outliers = sorted(
        (o for o in scored if o.outlier_score >= threshold),
        key=lambda o: (-o.outlier_score, o.element_id),
    )
    return result
