"""Shared reasoning data types: evidence bundles, hypotheses, follow-up queries,
and the per-run reasoning trace."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from ranloop import wire
from ranloop.datastore import ImRecord, OptimizationRecord
from ranloop.errors import ValidationError
from ranloop.simulator import CmChange, FmAlarm, NetworkTopology
from ranloop.tsa import DeviationTable

CAUSE_KINDS = (
    "hardware_fault",
    "config_regression",
    "band_level_interference",
    "cell_local_degradation",
    "capacity_overload",
    "unknown",
)

ACTION_KINDS = ("revert_config_change", "adjust_parameter", "open_ticket")

QUERY_KINDS = ("kpi", "cm_history", "fm_alarms", "precedents")

# Hypotheses with confidence inside this open band are unresolved and drive
# follow-up queries; outside it they are treated as settled.
RESOLUTION_BAND = (0.2, 0.8)


@dataclass(frozen=True)
class ProposedAction:
    action_id: str
    kind: str
    element_id: str
    level: str
    hypothesis_id: str
    guard_kpi: str
    parameter: str | None = None
    from_value: float | None = None
    to_value: float | None = None
    value_delta: float | None = None  # adjust_parameter may give a delta instead of a target
    evaluation_window: int = 8  # intervals (2 simulated hours at 900 s)
    guard_threshold_pct: float = 10.0
    cm_ref: tuple[str, str, int] | None = None  # (element, parameter, timestamp) being reverted

    def validate(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise ValidationError(f"unknown action kind: {self.kind}", field_path="kind")
        if self.kind == "revert_config_change" and self.cm_ref is None:
            raise ValidationError(
                "revert_config_change must reference the CM change it reverts",
                field_path="cm_ref",
            )
        if self.kind == "adjust_parameter" and (
            self.parameter is None or (self.to_value is None and self.value_delta is None)
        ):
            raise ValidationError(
                "adjust_parameter needs parameter and a target value or delta",
                field_path="parameter",
            )

    def to_payload(self) -> dict:
        return {
            "action_id": self.action_id,
            "kind": self.kind,
            "element_id": self.element_id,
            "level": self.level,
            "hypothesis_id": self.hypothesis_id,
            "guard_kpi": self.guard_kpi,
            "parameter": self.parameter,
            "from_value": self.from_value,
            "to_value": self.to_value,
            "value_delta": self.value_delta,
            "evaluation_window": self.evaluation_window,
            "guard_threshold_pct": self.guard_threshold_pct,
            "cm_ref": list(self.cm_ref) if self.cm_ref else None,
        }


@dataclass(frozen=True)
class Hypothesis:
    id: str
    cause_kind: str
    element_id: str
    level: str
    confidence: float
    evidence_refs: tuple[str, ...] = ()
    proposed_action: ProposedAction | None = None
    rationale: str = ""
    kpi: str | None = None

    def validate(self, bundle: "EvidenceBundle | None" = None) -> None:
        if self.cause_kind not in CAUSE_KINDS:
            raise ValidationError(f"unknown cause kind: {self.cause_kind}", field_path="cause_kind")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(
                f"confidence {self.confidence} outside [0, 1]", field_path="confidence"
            )
        if self.cause_kind == "unknown" and self.proposed_action is not None:
            raise ValidationError(
                "unknown-cause hypothesis cannot carry a proposed action",
                field_path="proposed_action",
            )
        if self.proposed_action is not None:
            self.proposed_action.validate()
        if bundle is not None:
            for ref in self.evidence_refs:
                if not bundle.resolves(ref):
                    raise ValidationError(f"unresolvable evidence ref: {ref}", field_path="evidence_refs")

    def resolved(self) -> bool:
        lo, hi = RESOLUTION_BAND
        return not (lo < self.confidence < hi)

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "cause_kind": self.cause_kind,
            "element_id": self.element_id,
            "level": self.level,
            "kpi": self.kpi,
            "confidence": self.confidence,
            "evidence_refs": list(self.evidence_refs),
            "proposed_action": self.proposed_action.to_payload() if self.proposed_action else None,
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class FollowUpQuery:
    kind: str
    params: tuple[tuple[str, object], ...]  # ordered key/value pairs, hashable
    reason: str  # short text naming the hypothesis this serves

    @classmethod
    def make(cls, kind: str, reason: str, **params) -> "FollowUpQuery":
        if kind not in QUERY_KINDS:
            raise ValidationError(f"unknown query kind: {kind}", field_path="kind")
        return cls(kind=kind, params=tuple(sorted(params.items())), reason=reason)

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def selector_key(self) -> str:
        """Canonical identity used for never-repeat-a-selector checks."""
        return wire.dumps({"kind": self.kind, "params": [[k, v] for k, v in self.params]})

    def to_payload(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "reason": self.reason}


@dataclass
class ReasoningPass:
    kind: str  # initial | reflection | refinement
    input_digest: str
    hypotheses: list[Hypothesis]
    queries: list[FollowUpQuery]
    backend: str
    elapsed_s: float = 0.0  # wall clock; excluded from canonical exports

    def to_payload(self) -> dict:
        return {
            "kind": self.kind,
            "input_digest": self.input_digest,
            "hypotheses": [h.to_payload() for h in self.hypotheses],
            "queries": [q.to_payload() for q in self.queries],
            "backend": self.backend,
        }


@dataclass
class ReasoningTrace:
    passes: list[ReasoningPass] = field(default_factory=list)

    def record(self, p: ReasoningPass) -> None:
        if not self.passes and p.kind != "initial":
            raise ValidationError("first reasoning pass must be 'initial'", field_path="kind")
        self.passes.append(p)

    def issued_selector_keys(self) -> set[str]:
        """Selectors actually dispatched for execution. Runners execute exactly
        the queries they record on refinement passes; queries on an initial
        pass are the backend's suggestions and are not yet issued."""
        return {
            q.selector_key() for p in self.passes if p.kind == "refinement" for q in p.queries
        }

    def to_payload(self) -> dict:
        return {"passes": [p.to_payload() for p in self.passes]}


@dataclass
class EvidenceBundle:
    """All situational context for one reasoning cycle over one window.

    Coverage markers record which targeted verification queries have been
    executed; the initial sweep starts with none, so confirmation-style
    confidence bumps only happen after an explicit follow-up.
    """

    window: tuple[int, int]
    deviation_table: DeviationTable
    topology: NetworkTopology
    alarms: list[FmAlarm] = field(default_factory=list)
    recent_config_changes: list[CmChange] = field(default_factory=list)
    inventory: list[ImRecord] = field(default_factory=list)
    precedents: list[OptimizationRecord] = field(default_factory=list)
    doc_excerpts: list[tuple[str, str]] = field(default_factory=list)
    interval_s: int = 900
    cm_coverage: list[tuple[str, int, int]] = field(default_factory=list)  # (element, start, end)
    peer_coverage: list[tuple[str, str]] = field(default_factory=list)  # (parent_id, kpi)

    @staticmethod
    def table_ref(row) -> str:
        return f"table:{row.level}/{row.element_id}/{row.kpi}/{row.timestamp}"

    @staticmethod
    def alarm_ref(alarm: FmAlarm) -> str:
        return f"alarm:{alarm.element_id}/{alarm.code}/{alarm.timestamp}"

    @staticmethod
    def cm_ref(change: CmChange) -> str:
        return f"cm:{change.element_id}/{change.parameter}/{change.timestamp}"

    def resolves(self, ref: str) -> bool:
        kind, _, key = ref.partition(":")
        if kind == "table":
            return any(self.table_ref(r) == ref for r in self.deviation_table.rows)
        if kind == "alarm":
            return any(self.alarm_ref(a) == ref for a in self.alarms)
        if kind == "cm":
            return any(self.cm_ref(c) == ref for c in self.recent_config_changes)
        if kind == "precedent":
            return any(r.record_id == key for r in self.precedents)
        if kind == "doc":
            return any(d == key for d, _ in self.doc_excerpts)
        return False

    def merge(self, delta: "EvidenceBundle | None") -> "EvidenceBundle":
        if delta is None:
            return self
        rows = {(r.kind, r.level, r.element_id, r.kpi, r.timestamp): r
                for r in self.deviation_table.rows}
        for r in delta.deviation_table.rows:
            rows.setdefault((r.kind, r.level, r.element_id, r.kpi, r.timestamp), r)
        merged_rows = sorted(rows.values(), key=lambda r: (-r.severity, r.rank))
        table = DeviationTable(window=self.window)
        table.rows = [replace(r, rank=i + 1) for i, r in enumerate(merged_rows)]
        table.summary = self.deviation_table.summary
        alarms = list({(a.element_id, a.timestamp, a.code): a
                       for a in self.alarms + delta.alarms}.values())
        cms = list({(c.element_id, c.parameter, c.timestamp): c
                    for c in self.recent_config_changes + delta.recent_config_changes}.values())
        precedents = list({r.record_id: r for r in self.precedents + delta.precedents}.values())
        return EvidenceBundle(
            window=self.window,
            deviation_table=table,
            topology=self.topology,
            alarms=sorted(alarms, key=lambda a: (a.timestamp, a.element_id, a.code)),
            recent_config_changes=sorted(cms, key=lambda c: (c.timestamp, c.element_id, c.parameter)),
            inventory=self.inventory or delta.inventory,
            precedents=sorted(precedents, key=lambda r: (-r.created_at, r.record_id)),
            doc_excerpts=list(dict(self.doc_excerpts + delta.doc_excerpts).items()),
            interval_s=self.interval_s,
            cm_coverage=sorted(set(self.cm_coverage) | set(delta.cm_coverage)),
            peer_coverage=sorted(set(self.peer_coverage) | set(delta.peer_coverage)),
        )

    def is_empty_delta(self, delta: "EvidenceBundle | None") -> bool:
        if delta is None:
            return True
        return (
            not delta.deviation_table.rows
            and not delta.alarms
            and not delta.recent_config_changes
            and not delta.precedents
            and not delta.doc_excerpts
            and not delta.cm_coverage
            and not delta.peer_coverage
        )

    def digest(self) -> str:
        payload = {
            "window": list(self.window),
            "rows": [r.to_payload() for r in self.deviation_table.rows],
            "alarms": [[a.element_id, a.timestamp, a.code, a.severity] for a in self.alarms],
            "cm": [
                [c.element_id, c.parameter, c.timestamp, c.old_value, c.new_value]
                for c in self.recent_config_changes
            ],
            "precedents": [r.record_id for r in self.precedents],
            "docs": [d for d, _ in self.doc_excerpts],
            "cm_coverage": [list(c) for c in self.cm_coverage],
            "peer_coverage": [list(p) for p in self.peer_coverage],
        }
        return hashlib.sha256(wire.dumps(payload).encode()).hexdigest()[:16]


@dataclass
class ReasoningResult:
    hypotheses: list[Hypothesis]
    queries: list[FollowUpQuery]
    no_finding: bool = False
