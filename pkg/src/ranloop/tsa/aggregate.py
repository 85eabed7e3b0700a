"""Hierarchical aggregation of cell-level series to any grouping level.

A cell missing a sample at some timestamp is excluded from that timestamp's
aggregate; the output grid is the union of member timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ranloop.errors import ValidationError
from ranloop.simulator.topology import NetworkTopology
from ranloop.tsa.series import Series

METHODS = ("traffic_weighted_mean", "arithmetic_mean", "sum")


@dataclass(frozen=True)
class AggregationRule:
    kpi: str
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown aggregation method: {self.method}", field_path="method")


def aggregate_series(
    cell_series: dict[str, Series],
    rule: AggregationRule,
    grouping: str,
    topology: NetworkTopology,
    weights: dict[str, Series] | None = None,
) -> dict[str, Series]:
    if grouping == "cell":
        return dict(cell_series)
    if rule.method == "traffic_weighted_mean" and weights is None:
        raise ValidationError(
            "traffic_weighted_mean needs weight series (traffic proxy)", field_path="weights"
        )

    for el, s in cell_series.items():
        ts = s.timestamps
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise ValidationError(f"series for {el} has unsorted or duplicate timestamps")

    out: dict[str, Series] = {}
    for group in topology.elements_at(grouping):
        members = [c for c in topology.member_cells(grouping, group) if c in cell_series]
        if not members:
            continue
        out[group] = _aggregate_group(members, cell_series, rule.method, weights)
    if not out:
        raise ValidationError(f"no groups at level {grouping} have member series")
    return out


def _aggregate_group(members, cell_series, method, weights):
    grid = sorted({int(t) for c in members for t in cell_series[c].timestamps})
    index = {t: i for i, t in enumerate(grid)}
    n = len(grid)
    acc_vals = np.full((len(members), n), np.nan)
    acc_wts = np.zeros((len(members), n))
    for row, cell in enumerate(members):
        s = cell_series[cell]
        idx = [index[int(t)] for t in s.timestamps]
        acc_vals[row, idx] = s.values
        if method == "traffic_weighted_mean":
            w = weights.get(cell)
            if w is not None and len(w):
                w_map = {int(t): v for t, v in zip(w.timestamps, w.values)}
                acc_wts[row, idx] = [w_map.get(int(t), 0.0) for t in s.timestamps]

    present = ~np.isnan(acc_vals)
    vals = np.where(present, acc_vals, 0.0)
    if method == "sum":
        agg = vals.sum(axis=0)
    elif method == "arithmetic_mean":
        counts = present.sum(axis=0)
        agg = vals.sum(axis=0) / np.maximum(counts, 1)
    else:  # traffic_weighted_mean with arithmetic fallback on zero total weight
        w = np.where(present, acc_wts, 0.0)
        total_w = w.sum(axis=0)
        weighted = (vals * w).sum(axis=0)
        counts = present.sum(axis=0)
        plain = vals.sum(axis=0) / np.maximum(counts, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            agg = np.where(total_w > 0, weighted / np.where(total_w > 0, total_w, 1.0), plain)
    return Series(np.array(grid, dtype=np.int64), agg)
