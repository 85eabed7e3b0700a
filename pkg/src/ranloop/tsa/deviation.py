"""Deviation-table assembly: aggregate to every hierarchy level, run all three
detectors, and rank findings by severity into one structured table."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ranloop import wire
from ranloop.datastore import DataStore, KpiSelector
from ranloop.simulator.kpis import KPI_DEFS, TRAFFIC_WEIGHT_KPI
from ranloop.simulator.topology import LEVEL_RANK, LEVELS, NetworkTopology
from ranloop.tsa.aggregate import AggregationRule, aggregate_series
from ranloop.tsa.anomaly import AnomalyParams, detect_anomalies
from ranloop.tsa.changepoint import ChangePointParams, detect_change_points
from ranloop.tsa.peers import score_peers
from ranloop.tsa.series import Series, remove_diurnal

FINDING_ORDER = {"change_point": 0, "anomaly": 1, "peer_outlier": 2}


@dataclass(frozen=True)
class TsaParams:
    changepoint: ChangePointParams = ChangePointParams()
    anomaly: AnomalyParams = AnomalyParams()
    peer_threshold: float = 5.0
    # Same interpretation choice as peer scoring: anomalies are scored on
    # diurnal-adjusted values so daily slopes do not masquerade as spikes.
    adjust_diurnal_for_anomalies: bool = True


@dataclass(frozen=True)
class DeviationRow:
    level: str
    element_id: str
    kpi: str
    kind: str  # change_point | anomaly | peer_outlier
    timestamp: int  # onset for change points, flag time for anomalies, window start for peers
    score: float
    severity: float
    rank: int = 0
    magnitude: float | None = None
    direction: str | None = None
    peer_group: str | None = None

    def to_payload(self) -> dict:
        out = {
            "rank": self.rank,
            "severity": self.severity,
            "kind": self.kind,
            "level": self.level,
            "element_id": self.element_id,
            "kpi": self.kpi,
            "timestamp": self.timestamp,
            "score": self.score,
        }
        if self.magnitude is not None:
            out["magnitude"] = self.magnitude
        if self.direction is not None:
            out["direction"] = self.direction
        if self.peer_group is not None:
            out["peer_group"] = self.peer_group
        return out


@dataclass
class DeviationTable:
    window: tuple[int, int]
    rows: list[DeviationRow] = field(default_factory=list)
    summary: dict[str, dict[str, int]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def rows_of_kind(self, kind: str) -> list[DeviationRow]:
        return [r for r in self.rows if r.kind == kind]

    def to_payload(self) -> dict:
        return {
            "window": {"start": self.window[0], "end": self.window[1]},
            "rows": [r.to_payload() for r in self.rows],
            "summary": {
                level: dict(counts) for level, counts in sorted(self.summary.items())
            },
            "warnings": list(self.warnings),
        }

    def to_text(self) -> str:
        """Aligned plain-text rendering; column order is part of the interface."""
        headers = ["rank", "severity", "kind", "level", "element", "kpi",
                   "time", "score", "magnitude", "direction"]
        table = [headers]
        for r in self.rows:
            table.append([
                str(r.rank),
                f"{r.severity:.2f}",
                r.kind,
                r.level,
                r.element_id,
                r.kpi,
                str(r.timestamp),
                f"{r.score:.2f}",
                "" if r.magnitude is None else f"{r.magnitude:.2f}",
                r.direction or "",
            ])
        widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
        lines = []
        for i, row in enumerate(table):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        if not self.rows:
            lines.append("(no findings)")
        counts = ", ".join(
            f"{lvl}: " + "/".join(str(self.summary[lvl].get(k, 0))
                                  for k in ("change_point", "anomaly", "peer_outlier"))
            for lvl in LEVELS if lvl in self.summary
        )
        lines.append("")
        lines.append(f"summary (change_point/anomaly/peer_outlier per level): {counts or 'none'}")
        return "\n".join(lines) + "\n"

    def to_canonical_json(self) -> str:
        return wire.dumps(self.to_payload())


def severity_of(kind: str, score: float, magnitude: float | None, sigma: float | None) -> float:
    if kind == "change_point":
        base = sigma if sigma and sigma > 0 else 1e-9
        return score * abs(magnitude or 0.0) / base
    return abs(score)


def build_deviation_table(
    store: DataStore,
    topology: NetworkTopology,
    window: tuple[int, int],
    params: TsaParams = TsaParams(),
) -> DeviationTable:
    table = DeviationTable(window=window)
    start, end = window
    if start >= end:
        return table

    kpis = tuple(k for k in KPI_DEFS)
    selector = KpiSelector(level="cell", kpis=kpis, time_range=window)
    raw = store.query_kpi(selector)
    cell_series: dict[str, dict[str, Series]] = {}
    for (el, kpi), pts in raw.items():
        if pts:
            cell_series.setdefault(kpi, {})[el] = Series.from_points(pts)
    if not cell_series:
        return table

    weights = cell_series.get(TRAFFIC_WEIGHT_KPI, {})
    rows: list[DeviationRow] = []

    for level in LEVELS:
        for kpi, per_cell in sorted(cell_series.items()):
            rule = AggregationRule(kpi=kpi, method=KPI_DEFS[kpi].aggregation)
            try:
                grouped = aggregate_series(per_cell, rule, level, topology, weights=weights)
            except Exception as e:  # collected, not fatal: table keeps other levels
                table.warnings.append(f"{level}/{kpi}: aggregation failed: {e}")
                continue
            rows.extend(_detect_level(grouped, level, kpi, params, window, topology, table))

    rows.sort(
        key=lambda r: (
            -r.severity,
            FINDING_ORDER[r.kind],
            LEVEL_RANK[r.level],
            r.element_id,
            r.kpi,
        )
    )
    table.rows = [replace(r, rank=i + 1) for i, r in enumerate(rows)]
    table.summary = _summarize(table.rows)
    return table


def _detect_level(grouped, level, kpi, params, window, topology, table):
    rows: list[DeviationRow] = []
    for element, series in sorted(grouped.items()):
        if len(series) >= 2 * params.changepoint.min_segment:
            try:
                for cp in detect_change_points(
                    series, params.changepoint, element_id=element, level=level, kpi=kpi
                ):
                    rows.append(
                        DeviationRow(
                            level=level,
                            element_id=element,
                            kpi=kpi,
                            kind="change_point",
                            timestamp=cp.onset,
                            score=cp.score,
                            severity=severity_of("change_point", cp.score, cp.magnitude, cp.sigma),
                            magnitude=cp.magnitude,
                            direction=cp.direction,
                        )
                    )
            except Exception as e:
                table.warnings.append(f"{level}/{element}/{kpi}: change detection failed: {e}")
        if len(series) >= params.anomaly.window + 1:
            try:
                scored = series
                if params.adjust_diurnal_for_anomalies:
                    scored = Series(series.timestamps, remove_diurnal(series, keep_level=True))
                for fl in detect_anomalies(
                    scored, params.anomaly, element_id=element, level=level, kpi=kpi
                ):
                    rows.append(
                        DeviationRow(
                            level=level,
                            element_id=element,
                            kpi=kpi,
                            kind="anomaly",
                            timestamp=fl.timestamp,
                            score=fl.robust_z,
                            severity=severity_of("anomaly", fl.robust_z, None, None),
                        )
                    )
            except Exception as e:
                table.warnings.append(f"{level}/{element}/{kpi}: anomaly detection failed: {e}")

    # Peer comparison inside each peer group at this level.
    groups: dict[tuple[str, str], dict[str, Series]] = {}
    for element, series in grouped.items():
        parent_level, parent_id = topology.parent_of(level, element)
        groups.setdefault((parent_level, parent_id), {})[element] = series
    for (p_level, p_id), members in sorted(groups.items()):
        res = score_peers(
            members,
            window,
            threshold=params.peer_threshold,
            level=level,
            kpi=kpi,
            peer_group=p_id,
        )
        table.warnings.extend(res.warnings)
        for o in res.outliers:
            rows.append(
                DeviationRow(
                    level=level,
                    element_id=o.element_id,
                    kpi=kpi,
                    kind="peer_outlier",
                    timestamp=window[0],
                    score=o.outlier_score,
                    severity=severity_of("peer_outlier", o.outlier_score, None, None),
                    peer_group=p_id,
                )
            )
    return rows


def _summarize(rows: list[DeviationRow]) -> dict[str, dict[str, int]]:
    summary: dict[str, dict[str, int]] = {
        lvl: {"change_point": 0, "anomaly": 0, "peer_outlier": 0} for lvl in LEVELS
    }
    for r in rows:
        summary[r.level][r.kind] += 1
    return summary
