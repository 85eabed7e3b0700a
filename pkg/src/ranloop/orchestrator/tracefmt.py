"""Run trace export (line-delimited canonical JSON) and replay.

The export is deterministic for rule-backend runs: no run ids, no wall-clock
fields, floats at 6 digits. The header embeds the full scenario document so a
trace is replayable on its own.
"""

from __future__ import annotations

import json

from ranloop import wire
from ranloop.errors import ValidationError
from ranloop.orchestrator.plan import Intent
from ranloop.orchestrator.runtime import RunHandle, RunLimits, RunSpec, Runtime
from ranloop.simulator import scenario_from_dict, scenario_to_dict

TRACE_SCHEMA = "ranloop-trace/1"


def export_trace(handle: RunHandle) -> str:
    state = handle.state
    header = {
        "entry": "header",
        "schema": TRACE_SCHEMA,
        "mode": state.mode,
        "approval_mode": state.approval_mode,
        "backend": state.backend_name,
        "scenario_name": state.scenario_name,
        "seed": state.seed,
        "intent": state.intent.to_payload(),
        "terminal_status": state.status,
        "scenario": scenario_to_dict(handle.spec.scenario),
        "limits": {
            "max_iterations": handle.spec.limits.max_iterations,
            "max_queries": handle.spec.limits.max_queries,
        },
    }
    lines = [wire.dumps(header)]
    if state.plan is not None:
        lines.append(wire.dumps({"entry": "plan", **state.plan.to_payload()}))
    for event in handle.events.events_from(1):
        lines.append(wire.dumps({"entry": "event", **event.to_payload()}))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> dict:
    header = None
    plan = None
    events = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValidationError(f"trace line {ln} is not valid JSON: {e}") from e
        kind = obj.get("entry")
        if kind == "header":
            header = obj
        elif kind == "plan":
            plan = obj
        elif kind == "event":
            events.append(obj)
        else:
            raise ValidationError(f"trace line {ln}: unknown entry kind {kind!r}")
    if header is None:
        raise ValidationError("trace has no header line")
    if header.get("schema") != TRACE_SCHEMA:
        raise ValidationError(f"unsupported trace schema: {header.get('schema')}")
    return {"header": header, "plan": plan, "events": events}


def replay_trace(text: str, runtime: Runtime | None = None) -> dict:
    """Re-execute the run a trace describes and compare terminal outcomes."""
    parsed = parse_trace(text)
    header = parsed["header"]
    scenario = scenario_from_dict(header["scenario"])
    intent_payload = header["intent"]
    intent = Intent(
        goal_kind=intent_payload["goal_kind"],
        window=(intent_payload["window"]["start"], intent_payload["window"]["end"]),
        level=intent_payload.get("level", "cluster"),
        element_id=intent_payload.get("element_id"),
    )
    decisions = [
        {"decision": e["payload"]["decision"], "note": e["payload"].get("note", "")}
        for e in parsed["events"]
        if e["kind"] == "status_change" and "decision" in e.get("payload", {})
    ]
    spec = RunSpec(
        intent=intent,
        mode=header["mode"],
        scenario=scenario,
        approval_mode=header["approval_mode"],
        backend_name=header["backend"],
        limits=RunLimits(**header.get("limits", {})),
        scripted_decisions=decisions,
    )
    rt = runtime or Runtime()
    run_id = rt.create_run(spec, background=False)
    handle = rt.get_handle(run_id)
    replayed = export_trace(handle)
    original_status = header["terminal_status"]
    return {
        "original_status": original_status,
        "replayed_status": handle.state.status,
        "status_match": original_status == handle.state.status,
        "original_event_count": len(parsed["events"]),
        "replayed_event_count": len(handle.events),
        "trace_match": replayed == text,
        "run_id": run_id,
    }
