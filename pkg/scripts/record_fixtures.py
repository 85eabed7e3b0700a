#!/usr/bin/env python3
"""Record API fixtures for the browser console's test suite.

Drives the real service in-process and freezes the payloads the console
consumes, so the frontend tests run with zero live backend. Re-run after any
wire-format change: python scripts/record_fixtures.py
"""

import json
import shutil
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "frontend" / "tests" / "fixtures"

sys.path.insert(0, str(REPO / "src"))

from ranloop.service import ServiceConfig, ServiceState, create_app  # noqa: E402


def wait_status(client, rid, statuses, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/runs/{rid}").json()
        if state["status"] in statuses:
            return state
        time.sleep(0.02)
    raise RuntimeError(f"run {rid} never reached {statuses}")


def sse_events(client, rid):
    with client.stream("GET", f"/runs/{rid}/events", params={"from": 1}) as resp:
        text = "".join(resp.iter_text())
    events = []
    for frame in text.split("\n\n"):
        data = None
        kind = None
        for line in frame.splitlines():
            if line.startswith("event: "):
                kind = line[7:].strip()
            elif line.startswith("data: "):
                data = line[6:]
        if kind and kind != "stream_end" and data:
            events.append(json.loads(data))
    return events


def record_run(client, scenario, decision, tag):
    rid = client.post("/runs", json={
        "scenario": scenario, "mode": "agentic", "approval_mode": "interactive",
    }).json()["run_id"]
    wait_status(client, rid, {"awaiting_approval"})
    approvals = client.get("/approvals").json()["approvals"]
    mine = next(a for a in approvals if a["run_id"] == rid)
    write(f"approval_pending_{tag}.json", mine)
    ack = client.post(f"/approvals/{mine['approval_id']}/decision",
                      json={"decision": decision, "note": f"fixture {decision}"}).json()
    write(f"decision_ack_{tag}.json", ack)
    final = wait_status(client, rid, {"confirmed", "rolled_back", "completed", "failed"})
    write(f"run_final_{tag}.json", final)
    write(f"events_{tag}.json", sse_events(client, rid))
    return rid


def write(name, payload):
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / name).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {name}")


def main():
    workspace = tempfile.mkdtemp(prefix="ranloop-fixtures-")
    cfg = ServiceConfig(workspace=workspace)
    state = ServiceState(cfg)
    state.workspace.ensure()
    for name in ("band-fault-b1-1004", "event-free-1001", "cm-regression-c1-1003",
                 "adversarial-action-c1-1007"):
        shutil.copy(REPO / "scenarios" / f"{name}.yaml", Path(workspace) / "scenarios")

    client = TestClient(create_app(cfg, state=state))

    write("topology_band_fault.json",
          client.get("/topology", params={"scenario": "band-fault-b1-1004"}).json())
    write("deviations_band_fault.json",
          client.get("/deviations", params={"scenario": "band-fault-b1-1004"}).json())
    write("topology_event_free.json",
          client.get("/topology", params={"scenario": "event-free-1001"}).json())
    write("deviations_event_free.json",
          client.get("/deviations", params={"scenario": "event-free-1001"}).json())
    write("kpi_c1_day.json",
          client.get("/kpi", params={
              "scenario": "band-fault-b1-1004", "elements": "c1",
              "kpis": "dl_throughput_mbps", "start": 0, "end": 86400,
          }).json())

    record_run(client, "cm-regression-c1-1003", "approve", "confirmed")
    record_run(client, "cm-regression-c1-1003", "reject", "declined")
    record_run(client, "adversarial-action-c1-1007", "approve", "rolled_back")
    print("done")


if __name__ == "__main__":
    main()
