"""Embedded store for PM samples, FM alarms, CM state, IM inventory, and
optimization records; file-backed via plain text formats (no database service).

PM import/export uses the simulator's delimiter-separated sample format;
FM/IM/optimization/CM records are line-delimited JSON objects.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ranloop import wire
from ranloop.errors import ConflictError, NotFoundError, ValidationError
from ranloop.simulator import (
    CellConfig,
    CmChange,
    FmAlarm,
    KpiSample,
    NetworkTopology,
    export_samples,
    parse_samples,
)
from ranloop.simulator.kpis import KPI_DEFS, in_domain
from ranloop.simulator.topology import LEVELS


@dataclass(frozen=True)
class KpiSelector:
    level: str
    kpis: tuple[str, ...]
    time_range: tuple[int, int]  # [start, end)
    element_ids: tuple[str, ...] | None = None  # None = all at level
    peer_scope: str | None = None  # parent element id; expands to its children at `level`

    def validate(self) -> None:
        if self.level not in LEVELS:
            raise ValidationError(f"unknown level: {self.level}", field_path="selector.level")
        start, end = self.time_range
        if start >= end:
            raise ValidationError(
                f"empty time range [{start}, {end})", field_path="selector.time_range"
            )
        for k in self.kpis:
            if k not in KPI_DEFS:
                raise ValidationError(f"unknown KPI name: {k}", field_path="selector.kpis")


@dataclass(frozen=True)
class ImRecord:
    element_id: str  # node-level element
    vendor: str
    hardware_model: str
    software_version: str
    commissioned_at: int


@dataclass(frozen=True)
class ConfigSnapshot:
    snapshot_id: str
    taken_at: int
    entries: dict[str, CellConfig]


@dataclass(frozen=True)
class OptimizationRecord:
    record_id: str
    created_at: int
    element_id: str
    level: str
    action_kind: str
    parameters_before: dict[str, float]
    parameters_after: dict[str, float]
    hypothesis_id: str
    cause_kind: str
    outcome: str  # confirmed | rolled_back | pending
    kpi_delta: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.outcome not in ("confirmed", "rolled_back", "pending"):
            raise ValidationError(f"unknown outcome: {self.outcome}", field_path="outcome")
        if self.outcome == "pending" and self.kpi_delta:
            raise ValidationError("pending record must have empty kpi_delta", field_path="kpi_delta")
        if self.outcome != "pending" and not self.kpi_delta:
            raise ValidationError(
                f"{self.outcome} record must carry the observed kpi_delta", field_path="kpi_delta"
            )


class DataStore:
    """In-memory store with single-writer locking and file round-trips."""

    def __init__(self, interval_s: int = 900):
        self.interval_s = interval_s
        self.topology: NetworkTopology | None = None
        self._pm: dict[tuple[str, str], dict[int, float]] = {}
        self._pm_levels: dict[str, str] = {}
        self._alarms: list[FmAlarm] = []
        self._im: dict[str, ImRecord] = {}
        self._cm: list[CmChange] = []
        self._snapshots: dict[str, ConfigSnapshot] = {}
        self._opt_records: list[OptimizationRecord] = []
        self._config_state = None  # live SimulationRun (or any object with .configs/.apply_config)
        self._snap_counter = 0
        self._lock = threading.RLock()

    # -- wiring --------------------------------------------------------------

    def set_topology(self, topology: NetworkTopology) -> None:
        with self._lock:
            self.topology = topology
            for node in topology.nodes.values():
                self._im[node.node_id] = ImRecord(
                    element_id=node.node_id,
                    vendor=node.vendor,
                    hardware_model=node.hardware_model,
                    software_version=node.software_version,
                    commissioned_at=0,
                )

    def attach_config_state(self, sim_run) -> None:
        """Point snapshot/restore at the live simulation's configuration."""
        with self._lock:
            self._config_state = sim_run

    # -- PM ---------------------------------------------------------------

    def ingest_pm(self, samples: list[KpiSample]) -> int:
        """Idempotent for duplicate (element, kpi, timestamp) keys: last write wins."""
        with self._lock:
            for i, s in enumerate(samples):
                if s.timestamp % self.interval_s != 0:
                    raise ValidationError(
                        f"sample {i}: timestamp {s.timestamp} not a multiple of {self.interval_s}",
                        field_path=f"samples[{i}].timestamp",
                    )
                if s.kpi not in KPI_DEFS:
                    raise ValidationError(
                        f"sample {i}: unknown KPI {s.kpi}", field_path=f"samples[{i}].kpi"
                    )
                if s.level not in LEVELS:
                    raise ValidationError(
                        f"sample {i}: unknown level {s.level}", field_path=f"samples[{i}].level"
                    )
                if not in_domain(s.kpi, s.value):
                    raise ValidationError(
                        f"sample {i}: value {s.value} outside {s.kpi} domain",
                        field_path=f"samples[{i}].value",
                    )
            for s in samples:
                self._pm.setdefault((s.element_id, s.kpi), {})[s.timestamp] = s.value
                self._pm_levels[s.element_id] = s.level
            return len(samples)

    def query_kpi(self, selector: KpiSelector) -> dict[tuple[str, str], list[tuple[int, float]]]:
        """Time-ordered series per (element, kpi), restricted to the half-open range."""
        selector.validate()
        with self._lock:
            elements = self._resolve_elements(selector)
            start, end = selector.time_range
            out: dict[tuple[str, str], list[tuple[int, float]]] = {}
            for el in elements:
                for kpi in selector.kpis:
                    series = self._pm.get((el, kpi), {})
                    pts = sorted((t, v) for t, v in series.items() if start <= t < end)
                    out[(el, kpi)] = pts
            return out

    def _resolve_elements(self, selector: KpiSelector) -> list[str]:
        if selector.peer_scope is not None:
            if self.topology is None:
                raise ValidationError("peer_scope requires an ingested topology")
            parent_level = None
            for lvl in LEVELS:
                if self.topology.exists(lvl, selector.peer_scope):
                    parent_level = lvl
                    break
            if parent_level is None:
                raise NotFoundError(f"unknown peer_scope element: {selector.peer_scope}")
            return self.topology.children_of(parent_level, selector.peer_scope, selector.level)
        if selector.element_ids is not None:
            for el in selector.element_ids:
                if self.topology is not None and not self.topology.exists(selector.level, el):
                    raise NotFoundError(f"unknown element id: {el}")
            return list(selector.element_ids)
        if self.topology is not None:
            return self.topology.elements_at(selector.level)
        return sorted({el for (el, _k) in self._pm if self._pm_levels.get(el) == selector.level})

    # -- FM / IM / CM -------------------------------------------------------

    def ingest_alarms(self, alarms: list[FmAlarm]) -> int:
        with self._lock:
            self._alarms.extend(alarms)
            self._alarms.sort(key=lambda a: (a.timestamp, a.element_id, a.code))
            return len(alarms)

    def alarms_in(self, start: int, end: int) -> list[FmAlarm]:
        with self._lock:
            return [a for a in self._alarms if start <= a.timestamp < end]

    def ingest_im(self, records: list[ImRecord]) -> int:
        with self._lock:
            for r in records:
                self._im[r.element_id] = r
            return len(records)

    def im_record(self, node_id: str) -> ImRecord | None:
        return self._im.get(node_id)

    def im_records(self) -> list[ImRecord]:
        return sorted(self._im.values(), key=lambda r: r.element_id)

    def record_cm_changes(self, changes: list[CmChange]) -> int:
        with self._lock:
            self._cm.extend(changes)
            self._cm.sort(key=lambda c: (c.timestamp, c.element_id, c.parameter))
            return len(changes)

    def cm_changes_in(self, start: int, end: int, element_id: str | None = None) -> list[CmChange]:
        with self._lock:
            return [
                c
                for c in self._cm
                if start <= c.timestamp < end and (element_id is None or c.element_id == element_id)
            ]

    # -- config snapshots -----------------------------------------------------

    def snapshot_config(self) -> ConfigSnapshot:
        with self._lock:
            if self._config_state is None:
                raise ValidationError("no live configuration state attached")
            self._snap_counter += 1
            snap = ConfigSnapshot(
                snapshot_id=f"snap-{self._snap_counter:04d}",
                taken_at=self._config_state.current_time,
                entries=dict(self._config_state.configs),
            )
            self._snapshots[snap.snapshot_id] = snap
            return snap

    def restore_config(self, snapshot_id: str) -> int:
        """Reapply snapshot values; returns the number of value-changing writes."""
        with self._lock:
            snap = self._snapshots.get(snapshot_id)
            if snap is None:
                raise NotFoundError(f"unknown snapshot id: {snapshot_id}")
            if self._config_state is None:
                raise ValidationError("no live configuration state attached")
            applied = 0
            for cell_id, cfg in sorted(snap.entries.items()):
                live = self._config_state.configs[cell_id]
                for param, value in cfg.values().items():
                    if live.value_of(param) != value:
                        self._config_state.apply_config(cell_id, param, value, source="restore")
                        applied += 1
            return applied

    def get_snapshot(self, snapshot_id: str) -> ConfigSnapshot:
        snap = self._snapshots.get(snapshot_id)
        if snap is None:
            raise NotFoundError(f"unknown snapshot id: {snapshot_id}")
        return snap

    # -- optimization records -------------------------------------------------

    def record_optimization(self, rec: OptimizationRecord) -> None:
        rec.validate()
        with self._lock:
            if any(r.record_id == rec.record_id for r in self._opt_records):
                raise ConflictError(f"duplicate optimization record id: {rec.record_id}")
            self._opt_records.append(rec)

    def update_optimization(self, record_id: str, outcome: str, kpi_delta: dict[str, float]) -> OptimizationRecord:
        with self._lock:
            for i, r in enumerate(self._opt_records):
                if r.record_id == record_id:
                    updated = OptimizationRecord(
                        record_id=r.record_id,
                        created_at=r.created_at,
                        element_id=r.element_id,
                        level=r.level,
                        action_kind=r.action_kind,
                        parameters_before=r.parameters_before,
                        parameters_after=r.parameters_after,
                        hypothesis_id=r.hypothesis_id,
                        cause_kind=r.cause_kind,
                        outcome=outcome,
                        kpi_delta=dict(kpi_delta),
                    )
                    updated.validate()
                    self._opt_records[i] = updated
                    return updated
            raise NotFoundError(f"unknown optimization record: {record_id}")

    def optimization_records(self) -> list[OptimizationRecord]:
        return list(self._opt_records)

    def query_precedents(self, element_id: str, action_kind: str, limit: int) -> list[OptimizationRecord]:
        """Most recent matches, newest first: same element before same hardware model."""
        if limit <= 0:
            return []
        with self._lock:
            newest_first = sorted(self._opt_records, key=lambda r: (-r.created_at, r.record_id))
            same_element = [
                r for r in newest_first
                if r.element_id == element_id and r.action_kind == action_kind
            ]
            model = self._hardware_model_of(element_id)
            same_model = []
            if model is not None:
                for r in newest_first:
                    if r in same_element or r.action_kind != action_kind:
                        continue
                    if self._hardware_model_of(r.element_id) == model:
                        same_model.append(r)
            return (same_element + same_model)[:limit]

    def _hardware_model_of(self, element_id: str) -> str | None:
        node_id = None
        if self.topology is not None:
            if element_id in self.topology.cells:
                node_id = self.topology.cells[element_id].node
            elif element_id in self.topology.nodes:
                node_id = element_id
        rec = self._im.get(node_id) if node_id else self._im.get(element_id)
        return rec.hardware_model if rec else None

    # -- persistence ----------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        with self._lock:
            samples = [
                KpiSample(el, self._pm_levels.get(el, "cell"), kpi, t, v)
                for (el, kpi), series in sorted(self._pm.items())
                for t, v in sorted(series.items())
            ]
            (d / "pm_samples.csv").write_text(export_samples(samples), encoding="utf-8")
            (d / "fm_alarms.jsonl").write_text(
                wire.dump_jsonl(
                    {
                        "element_id": a.element_id,
                        "level": a.level,
                        "timestamp": a.timestamp,
                        "code": a.code,
                        "severity": a.severity,
                    }
                    for a in self._alarms
                ),
                encoding="utf-8",
            )
            (d / "im_records.jsonl").write_text(
                wire.dump_jsonl(
                    {
                        "element_id": r.element_id,
                        "vendor": r.vendor,
                        "hardware_model": r.hardware_model,
                        "software_version": r.software_version,
                        "commissioned_at": r.commissioned_at,
                    }
                    for r in self.im_records()
                ),
                encoding="utf-8",
            )
            (d / "cm_changes.jsonl").write_text(
                wire.dump_jsonl(
                    {
                        "element_id": c.element_id,
                        "parameter": c.parameter,
                        "timestamp": c.timestamp,
                        "old_value": c.old_value,
                        "new_value": c.new_value,
                        "source": c.source,
                    }
                    for c in self._cm
                ),
                encoding="utf-8",
            )
            (d / "optimization_records.jsonl").write_text(
                wire.dump_jsonl(_opt_to_dict(r) for r in self._opt_records), encoding="utf-8"
            )

    @classmethod
    def load(cls, directory: str | Path, interval_s: int = 900) -> "DataStore":
        d = Path(directory)
        store = cls(interval_s=interval_s)
        pm = d / "pm_samples.csv"
        if pm.exists():
            store.ingest_pm(parse_samples(pm.read_text(encoding="utf-8")))
        fm = d / "fm_alarms.jsonl"
        if fm.exists():
            store.ingest_alarms(
                [FmAlarm(**o) for o in wire.load_jsonl(fm.read_text(encoding="utf-8"))]
            )
        im = d / "im_records.jsonl"
        if im.exists():
            store.ingest_im(
                [ImRecord(**o) for o in wire.load_jsonl(im.read_text(encoding="utf-8"))]
            )
        cm = d / "cm_changes.jsonl"
        if cm.exists():
            store.record_cm_changes(
                [CmChange(**o) for o in wire.load_jsonl(cm.read_text(encoding="utf-8"))]
            )
        opt = d / "optimization_records.jsonl"
        if opt.exists():
            for o in wire.load_jsonl(opt.read_text(encoding="utf-8")):
                store.record_optimization(_opt_from_dict(o))
        return store


def _opt_to_dict(r: OptimizationRecord) -> dict:
    return {
        "record_id": r.record_id,
        "created_at": r.created_at,
        "element_id": r.element_id,
        "level": r.level,
        "action_kind": r.action_kind,
        "parameters_before": r.parameters_before,
        "parameters_after": r.parameters_after,
        "hypothesis_id": r.hypothesis_id,
        "cause_kind": r.cause_kind,
        "outcome": r.outcome,
        "kpi_delta": r.kpi_delta,
    }


def _opt_from_dict(o: dict) -> OptimizationRecord:
    return OptimizationRecord(
        record_id=o["record_id"],
        created_at=o["created_at"],
        element_id=o["element_id"],
        level=o["level"],
        action_kind=o["action_kind"],
        parameters_before={k: float(v) for k, v in o["parameters_before"].items()},
        parameters_after={k: float(v) for k, v in o["parameters_after"].items()},
        hypothesis_id=o["hypothesis_id"],
        cause_kind=o["cause_kind"],
        outcome=o["outcome"],
        kpi_delta={k: float(v) for k, v in o["kpi_delta"].items()},
    )


def ingest_scenario_data(store: DataStore, topology, sim_run, samples, spec) -> None:
    """Standard loading path: topology, PM, FM, and scenario CM history."""
    store.set_topology(topology)
    store.ingest_pm(samples)
    from ranloop.simulator import emit_fm_alarms

    store.ingest_alarms(emit_fm_alarms(spec))
    store.record_cm_changes(list(sim_run.cm_log))
    store.attach_config_state(sim_run)
