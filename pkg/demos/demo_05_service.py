# Service walkthrough: drive the HTTP surface end to end, including the
# human approval gate and the resumable event stream.

import json
import shutil
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from ranloop.service import ServiceConfig, ServiceState, create_app

REPO = Path(__file__).resolve().parents[1]

workspace = tempfile.mkdtemp(prefix="ranloop-demo-")
cfg = ServiceConfig(workspace=workspace)
state = ServiceState(cfg)
state.workspace.ensure()
shutil.copy(REPO / "scenarios" / "cm-regression-c1-1003.yaml",
            Path(workspace) / "scenarios")

client = TestClient(create_app(cfg, state=state))

print("scenarios:", client.get("/scenarios").json()["scenarios"])

topo = client.get("/topology", params={"scenario": "cm-regression-c1-1003"}).json()
print("topology:", len(topo["cells"]), "cells under", topo["clusters"])

table = client.get("/deviations", params={"scenario": "cm-regression-c1-1003"}).json()
print("top deviation row:", table["rows"][0])

# Launch an agentic run that will ask for approval.
run_id = client.post("/runs", json={
    "scenario": "cm-regression-c1-1003",
    "mode": "agentic",
    "approval_mode": "interactive",
}).json()["run_id"]
print("\nrun:", run_id)

while client.get(f"/runs/{run_id}").json()["status"] != "awaiting_approval":
    time.sleep(0.05)
pending = client.get("/approvals").json()["approvals"][0]
print("pending approval:", pending["approval_id"],
      "->", pending["action"]["kind"], "on", pending["action"]["element_id"])

client.post(f"/approvals/{pending['approval_id']}/decision",
            json={"decision": "approve", "note": "demo operator"})
while client.get(f"/runs/{run_id}").json()["status"] not in (
        "confirmed", "rolled_back", "completed", "failed"):
    time.sleep(0.05)
final = client.get(f"/runs/{run_id}").json()
print("terminal status:", final["status"])
print("validation:", final["validation"]["outcome"],
      "delta:", final["validation"]["kpi_delta"]["dl_throughput_mbps"])

# Stream the whole event history, then resume from the middle: no gaps.
with client.stream("GET", f"/runs/{run_id}/events", params={"from": 1}) as resp:
    lines = [ln for ln in "".join(resp.iter_text()).splitlines() if ln.startswith("id:")]
print(f"\n{len(lines)} events streamed; resuming from 5 ...")
with client.stream("GET", f"/runs/{run_id}/events", params={"from": 5}) as resp:
    resumed = [ln for ln in "".join(resp.iter_text()).splitlines() if ln.startswith("id:")]
print("resumed ids:", [ln.split()[1] for ln in resumed[:5]], "...")

trace = client.get(f"/runs/{run_id}/trace").text
header = json.loads(trace.splitlines()[0])
print("\ntrace header:", {k: header[k] for k in ("mode", "terminal_status", "seed")})
