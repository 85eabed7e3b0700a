"""Deterministic rule backend: the testable oracle behind the reasoning surface.

Rules over a change-point finding, in precedence order (first match wins):

  R1  a fault alarm co-located with the finding within +/-2 intervals
      -> hardware_fault (0.9) scoped to the alarm element
  R2  a CM change on a covered cell at most 8 intervals before onset
      -> config_regression (0.85) with a revert action
  R3  >= 80% of a band's cells shifted the same direction (or the band-level
      aggregate itself shifted) -> band_level_interference (0.8)
  R4  a single cell shifted while its node siblings are clean
      -> cell_local_degradation (0.7) with a parameter-adjust action
  R5  otherwise -> unknown (0.3) plus follow-up queries

Confidence constants sit so that R1-R3 are resolved on creation while R4/R5
fall inside the (0.2, 0.8) follow-up band. Confirmation bumps only happen in
reflection, after an explicit coverage-bearing follow-up query executed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ranloop.reasoning.types import (
    EvidenceBundle,
    FollowUpQuery,
    Hypothesis,
    ProposedAction,
    ReasoningResult,
    ReasoningTrace,
)

R1_CONFIDENCE = 0.9
R2_CONFIDENCE = 0.85
R3_CONFIDENCE = 0.8
R4_CONFIDENCE = 0.7
R5_CONFIDENCE = 0.3
CONFIRMED_R4 = 0.8
R1_ALARM_SLACK_INTERVALS = 2
R2_CM_LOOKBACK_INTERVALS = 8
R3_BAND_COVERAGE = 0.8
DEFAULT_TILT_DELTA = -1.0

BACKEND_NAME = "rule"


@dataclass
class ReflectResult:
    hypotheses: list[Hypothesis]
    retired: list[tuple[Hypothesis, str]] = field(default_factory=list)


def reason_initial(bundle: EvidenceBundle) -> ReasoningResult:
    hypotheses = _evaluate(bundle)
    if not bundle.deviation_table.rows:
        return ReasoningResult(hypotheses=[], queries=[], no_finding=True)
    queries = refine_queries(ReasoningTrace(), hypotheses)
    return ReasoningResult(hypotheses=hypotheses, queries=queries, no_finding=not hypotheses)


def reflect(
    bundle: EvidenceBundle,
    prior: list[Hypothesis],
    new_evidence: EvidenceBundle | None,
) -> ReflectResult:
    if bundle.is_empty_delta(new_evidence):
        return ReflectResult(hypotheses=list(prior))

    merged = bundle.merge(new_evidence)
    fresh = _evaluate(merged)
    fresh_by_key = {_key(h): h for h in fresh}

    revised: list[Hypothesis] = []
    retired: list[tuple[Hypothesis, str]] = []
    used_keys: set = set()

    for p in prior:
        key = _key(p)
        match = fresh_by_key.get(key)
        if match is not None:
            used_keys.add(key)
            conf = max(p.confidence, match.confidence)
            if match.cause_kind == "cell_local_degradation" and _peers_confirmed(merged, match):
                conf = max(conf, CONFIRMED_R4)
            revised.append(replace(match, confidence=conf))
            continue

        if p.cause_kind == "config_regression" and _cm_falsified(merged, p):
            retired.append((p, "CM history covered the pre-onset window and shows no change"))
            continue

        superseding = _find_superseding(merged, fresh, p)
        if superseding is not None:
            retired.append((p, f"superseded by broader-scope hypothesis {superseding.id}"))
            continue

        if _finding_still_present(merged, p):
            retired.append((p, "rule conditions no longer hold against merged evidence"))
            continue

        revised.append(p)

    for h in fresh:
        if _key(h) not in used_keys and not any(_key(r) == _key(h) for r in revised):
            revised.append(h)

    revised.sort(key=lambda h: (-h.confidence, h.level, h.element_id, h.cause_kind))
    return ReflectResult(hypotheses=revised, retired=retired)


def refine_queries(trace: ReasoningTrace, hypotheses: list[Hypothesis]) -> list[FollowUpQuery]:
    """Targeted queries for hypotheses still inside the resolution band; never
    repeats a selector already issued anywhere in the trace."""
    issued = trace.issued_selector_keys()
    out: list[FollowUpQuery] = []
    for h in sorted(hypotheses, key=lambda h: (-h.confidence, h.id)):
        if h.resolved():
            continue
        for q in _query_ladder(h):
            key = q.selector_key()
            if key in issued:
                continue
            issued.add(key)
            out.append(q)
            break
    return out


# -- rule evaluation ---------------------------------------------------------


def _evaluate(bundle: EvidenceBundle) -> list[Hypothesis]:
    topo = bundle.topology
    findings = [r for r in bundle.deviation_table.rows if r.kind == "change_point"]
    by_key: dict[tuple, Hypothesis] = {}

    for row in findings:
        hyp = (
            _rule_hardware_fault(bundle, row)
            or _rule_config_regression(bundle, row)
            or _rule_band_interference(bundle, row)
            or _rule_cell_local(bundle, row)
            or _rule_unknown(bundle, row)
        )
        key = _key(hyp)
        if key in by_key:
            existing = by_key[key]
            merged_refs = tuple(dict.fromkeys(existing.evidence_refs + hyp.evidence_refs))
            by_key[key] = replace(existing, evidence_refs=merged_refs)
        else:
            by_key[key] = hyp

    hypotheses = list(by_key.values())

    # An unknown scoped inside (or equal to) a better-explained scope adds no
    # information: the aggregate-level echo of a localized fault.
    explained: list[set] = [
        set(topo.member_cells(h.level, h.element_id))
        for h in hypotheses
        if h.cause_kind != "unknown"
    ]
    kept = []
    for h in hypotheses:
        if h.cause_kind == "unknown":
            cells = set(topo.member_cells(h.level, h.element_id))
            if any(cells & e for e in explained):
                continue
        kept.append(h)

    kept.sort(key=lambda h: (-h.confidence, h.level, h.element_id, h.cause_kind))
    return kept


def _covered_cells(bundle: EvidenceBundle, level: str, element: str) -> set[str]:
    return set(bundle.topology.member_cells(level, element))


def _rule_hardware_fault(bundle, row):
    member = _covered_cells(bundle, row.level, row.element_id)
    slack = R1_ALARM_SLACK_INTERVALS * bundle.interval_s
    for alarm in bundle.alarms:
        if abs(alarm.timestamp - row.timestamp) > slack:
            continue
        if not (_covered_cells(bundle, alarm.level, alarm.element_id) & member):
            continue
        action = ProposedAction(
            action_id=f"act-ticket-{alarm.element_id}",
            kind="open_ticket",
            element_id=alarm.element_id,
            level=alarm.level,
            hypothesis_id=f"h-hardware_fault-{alarm.level}-{alarm.element_id}",
            guard_kpi=row.kpi,
        )
        return Hypothesis(
            id=f"h-hardware_fault-{alarm.level}-{alarm.element_id}",
            cause_kind="hardware_fault",
            element_id=alarm.element_id,
            level=alarm.level,
            confidence=R1_CONFIDENCE,
            evidence_refs=(bundle.table_ref(row), bundle.alarm_ref(alarm)),
            proposed_action=action,
            rationale=f"{alarm.code} alarm on {alarm.element_id} within "
            f"{R1_ALARM_SLACK_INTERVALS} intervals of the shift onset",
            kpi=row.kpi,
        )
    return None


def _rule_config_regression(bundle, row):
    member = _covered_cells(bundle, row.level, row.element_id)
    lookback = R2_CM_LOOKBACK_INTERVALS * bundle.interval_s
    best = None
    for cm in bundle.recent_config_changes:
        if cm.element_id not in member:
            continue
        gap = row.timestamp - cm.timestamp
        if 0 <= gap <= lookback and (best is None or cm.timestamp > best.timestamp):
            best = cm
    if best is None:
        return None
    hid = f"h-config_regression-cell-{best.element_id}"
    action = ProposedAction(
        action_id=f"act-revert-{best.element_id}-{best.parameter}-{best.timestamp}",
        kind="revert_config_change",
        element_id=best.element_id,
        level="cell",
        hypothesis_id=hid,
        guard_kpi=row.kpi,
        parameter=best.parameter,
        from_value=best.new_value,
        to_value=best.old_value,
        cm_ref=(best.element_id, best.parameter, best.timestamp),
    )
    return Hypothesis(
        id=hid,
        cause_kind="config_regression",
        element_id=best.element_id,
        level="cell",
        confidence=R2_CONFIDENCE,
        evidence_refs=(bundle.table_ref(row), bundle.cm_ref(best)),
        proposed_action=action,
        rationale=f"{best.parameter} changed on {best.element_id} "
        f"{(row.timestamp - best.timestamp) // bundle.interval_s} intervals before onset",
        kpi=row.kpi,
    )


def _rule_band_interference(bundle, row):
    topo = bundle.topology
    if row.level == "band":
        band = row.element_id
    elif row.level == "cell":
        band = topo.cells[row.element_id].band
    else:
        return None

    member = set(topo.member_cells("band", band))
    shifted_rows = [
        r
        for r in bundle.deviation_table.rows
        if r.kind == "change_point"
        and r.level == "cell"
        and r.kpi == row.kpi
        and r.direction == row.direction
        and r.element_id in member
    ]
    # A band-level aggregate row alone is not enough: one big cell shift can
    # drag the aggregate. Interference needs most member cells shifted.
    coverage = len({r.element_id for r in shifted_rows}) / max(len(member), 1)
    if coverage < R3_BAND_COVERAGE:
        return None

    refs = [bundle.table_ref(row)] + [bundle.table_ref(r) for r in shifted_rows]
    hid = f"h-band_level_interference-band-{band}"
    action = ProposedAction(
        action_id=f"act-ticket-{band}",
        kind="open_ticket",
        element_id=band,
        level="band",
        hypothesis_id=hid,
        guard_kpi=row.kpi,
    )
    return Hypothesis(
        id=hid,
        cause_kind="band_level_interference",
        element_id=band,
        level="band",
        confidence=R3_CONFIDENCE,
        evidence_refs=tuple(dict.fromkeys(refs)),
        proposed_action=action,
        rationale=f"band {band}: {int(coverage * 100)}% of member cells shifted "
        f"{row.direction} on {row.kpi}",
        kpi=row.kpi,
    )


def _rule_cell_local(bundle, row):
    if row.level != "cell":
        return None
    topo = bundle.topology
    node = topo.cells[row.element_id].node
    siblings = [c for c in topo.member_cells("node", node) if c != row.element_id]
    sibling_shifts = {
        r.element_id
        for r in bundle.deviation_table.rows
        if r.kind == "change_point" and r.level == "cell" and r.kpi == row.kpi
    } & set(siblings)
    if sibling_shifts:
        return None
    hid = f"h-cell_local_degradation-cell-{row.element_id}"
    action = _adjust_action_from_precedents(bundle, row, hid)
    return Hypothesis(
        id=hid,
        cause_kind="cell_local_degradation",
        element_id=row.element_id,
        level="cell",
        confidence=R4_CONFIDENCE,
        evidence_refs=(bundle.table_ref(row),),
        proposed_action=action,
        rationale=f"only {row.element_id} shifted on {row.kpi}; "
        f"node {node} siblings are clean",
        kpi=row.kpi,
    )


def _adjust_action_from_precedents(bundle, row, hid) -> ProposedAction:
    parameter, delta = "electrical_tilt_deg", DEFAULT_TILT_DELTA
    evidence_param = None
    for rec in bundle.precedents:
        if rec.outcome != "confirmed" or rec.action_kind != "adjust_parameter":
            continue
        for p, after in sorted(rec.parameters_after.items()):
            before = rec.parameters_before.get(p)
            if before is not None and after != before:
                parameter, delta = p, after - before
                evidence_param = rec.record_id
                break
        if evidence_param:
            break
    return ProposedAction(
        action_id=f"act-adjust-{row.element_id}-{parameter}",
        kind="adjust_parameter",
        element_id=row.element_id,
        level="cell",
        hypothesis_id=hid,
        guard_kpi=row.kpi,
        parameter=parameter,
        value_delta=delta,
    )


def _rule_unknown(bundle, row):
    return Hypothesis(
        id=f"h-unknown-{row.level}-{row.element_id}",
        cause_kind="unknown",
        element_id=row.element_id,
        level=row.level,
        confidence=R5_CONFIDENCE,
        evidence_refs=(bundle.table_ref(row),),
        proposed_action=None,
        rationale="no rule matched: isolated shift without alarm, CM change, "
        "or band-wide pattern",
        kpi=row.kpi,
    )


# -- reflection helpers --------------------------------------------------------


def _key(h: Hypothesis) -> tuple:
    return (h.cause_kind, h.level, h.element_id)


def _peers_confirmed(merged: EvidenceBundle, h: Hypothesis) -> bool:
    node = merged.topology.cells[h.element_id].node
    covered = {(parent, kpi) for parent, kpi in merged.peer_coverage}
    return (node, h.kpi) in covered or (node, "*") in covered


def _cm_falsified(merged: EvidenceBundle, p: Hypothesis) -> bool:
    onset = _onset_from_refs(p)
    if onset is None:
        return False
    need_start = onset - R2_CM_LOOKBACK_INTERVALS * merged.interval_s
    covered = any(
        (el in ("*", p.element_id)) and start <= need_start and end > onset
        for el, start, end in merged.cm_coverage
    )
    if not covered:
        return False
    member = _covered_cells(merged, p.level, p.element_id)
    return not any(
        c.element_id in member and 0 <= onset - c.timestamp <= R2_CM_LOOKBACK_INTERVALS * merged.interval_s
        for c in merged.recent_config_changes
    )


def _onset_from_refs(p: Hypothesis) -> int | None:
    for ref in p.evidence_refs:
        if ref.startswith("table:"):
            try:
                return int(ref.rsplit("/", 1)[1])
            except (IndexError, ValueError):
                continue
    return None


def _find_superseding(merged, fresh, p):
    p_cells = set(merged.topology.member_cells(p.level, p.element_id))
    for f in fresh:
        if _key(f) == _key(p) or f.cause_kind == "unknown":
            continue
        f_cells = set(merged.topology.member_cells(f.level, f.element_id))
        if p_cells < f_cells and f.confidence >= p.confidence:
            return f
    return None


def _finding_still_present(merged: EvidenceBundle, p: Hypothesis) -> bool:
    for ref in p.evidence_refs:
        if ref.startswith("table:") and merged.resolves(ref):
            return True
    return False


# -- follow-up query templates ---------------------------------------------------


def _query_ladder(h: Hypothesis):
    day = 96  # intervals per day at the default cadence

    if h.cause_kind == "config_regression":
        yield FollowUpQuery.make(
            "cm_history",
            reason=f"verify CM change behind {h.id}",
            element=h.element_id,
            onset_lookaround_intervals=day,
        )
        return
    if h.cause_kind == "cell_local_degradation":
        yield FollowUpQuery.make(
            "kpi",
            reason=f"confirm node siblings clean for {h.id}",
            level="cell",
            peer_scope="node",
            element=h.element_id,
            kpi=h.kpi or "*",
        )
        return
    if h.cause_kind == "capacity_overload":
        yield FollowUpQuery.make(
            "kpi",
            reason=f"load check for {h.id}",
            level=h.level,
            element=h.element_id,
            kpi="prb_utilization_pct",
        )
        return

    # unknown (and any other unresolved kind): widening escalation ladder
    yield FollowUpQuery.make(
        "kpi",
        reason=f"broaden scope for {h.id}",
        level="node",
        element=h.element_id,
        kpi=h.kpi or "*",
    )
    yield FollowUpQuery.make(
        "fm_alarms",
        reason=f"alarm sweep for {h.id}",
        element=h.element_id,
        lookaround_intervals=day,
    )
    yield FollowUpQuery.make(
        "precedents",
        reason=f"historical matches for {h.id}",
        element=h.element_id,
        limit=5,
    )
    yield FollowUpQuery.make(
        "cm_history",
        reason=f"CM sweep for {h.id}",
        element=h.element_id,
        onset_lookaround_intervals=day,
    )
    widen = 1
    while True:
        yield FollowUpQuery.make(
            "kpi",
            reason=f"network-wide sweep for {h.id} (+/-{widen} day)",
            level="cluster",
            element="*",
            kpi=h.kpi or "*",
            widen_days=widen,
        )
        widen += 1
