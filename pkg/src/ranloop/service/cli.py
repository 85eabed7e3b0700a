"""Command-line surface covering the same capabilities as the HTTP API.

Exit codes: 0 success, 2 validation error, 3 backend failure, 4 not found.
Scenario management, analysis, and runs execute in-process against the local
workspace; approvals and trace export can also target a running service via
--server (or RANLOOP_SERVER).
"""

from __future__ import annotations

import sys
import threading

import click
import httpx

from ranloop import wire
from ranloop.errors import NotFoundError, RanLoopError, ValidationError
from ranloop.orchestrator import Intent, RunLimits, RunSpec, Runtime, export_trace, replay_trace
from ranloop.service.config import ServiceConfig, Workspace, parse_window
from ranloop.tsa import build_deviation_table


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(2)
    except click.Abort:
        sys.exit(1)
    except RanLoopError as e:
        click.echo(f"error [{e.code}]: {e.message}", err=True)
        if e.field_path:
            click.echo(f"  at: {e.field_path}", err=True)
        sys.exit(e.exit_code)


@click.group()
@click.option("--config", "config_path", default=None, help="Config file (YAML).")
@click.option("--workspace", default=None, help="Workspace directory override.")
@click.option("--server", default=None, envvar="RANLOOP_SERVER",
              help="Base URL of a running service (for approvals/trace export).")
@click.pass_context
def cli(ctx, config_path, workspace, server):
    """Closed-loop RAN KPI monitoring and optimization."""
    cfg = ServiceConfig.load(config_path)
    if workspace:
        cfg.workspace = workspace
    ctx.obj = {"config": cfg, "workspace": Workspace(cfg.workspace), "server": server}


# -- scenarios ------------------------------------------------------------------


@cli.group()
def scenario():
    """Manage scenario documents in the workspace."""


@scenario.command("ingest")
@click.argument("path", type=click.Path(exists=True))
@click.pass_obj
def scenario_ingest(obj, path):
    spec = obj["workspace"].ingest_scenario(path)
    click.echo(f"ingested scenario {spec.name} "
               f"(horizon {spec.horizon} x {spec.interval_s}s, seed {spec.seed})")


@scenario.command("list")
@click.pass_obj
def scenario_list(obj):
    names = obj["workspace"].list_scenarios()
    if not names:
        click.echo("(no scenarios ingested)")
    for name in names:
        click.echo(name)


# -- analysis -------------------------------------------------------------------


@cli.command()
@click.option("--scenario", "scenario_name", required=True)
@click.option("--start", type=int, default=None, help="Window start (s).")
@click.option("--end", type=int, default=None, help="Window end (s), exclusive.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.pass_obj
def analyze(obj, scenario_name, start, end, fmt):
    """Build the deviation table for a scenario window and print it."""
    from ranloop.orchestrator import RunContext

    spec = obj["workspace"].load_scenario(scenario_name)
    ctx = RunContext.prepare(spec)
    window = parse_window(start, end, spec.horizon_s)
    table = build_deviation_table(ctx.store, ctx.topology, window, ctx.params)
    if fmt == "json":
        click.echo(table.to_canonical_json())
    else:
        click.echo(table.to_text(), nl=False)


# -- runs ----------------------------------------------------------------------


@cli.command()
@click.option("--scenario", "scenario_name", required=True)
@click.option("--mode", type=click.Choice(["workflow", "agent", "agentic"]), default="workflow")
@click.option("--approval", type=click.Choice(["interactive", "auto_approve", "auto_reject"]),
              default="interactive")
@click.option("--backend", type=click.Choice(["rule", "external"]), default="rule")
@click.option("--max-iterations", type=int, default=3)
@click.option("--max-queries", type=int, default=8)
@click.option("--watch", is_flag=True, help="Follow the event stream while the run executes.")
@click.option("--trace-out", type=click.Path(), default=None,
              help="Write the exported run trace to this file.")
@click.pass_obj
def run(obj, scenario_name, mode, approval, backend, max_iterations, max_queries,
        watch, trace_out):
    """Execute a run in-process (all three modes)."""
    spec_doc = obj["workspace"].load_scenario(scenario_name)
    runtime = Runtime()
    run_spec = RunSpec(
        intent=Intent(goal_kind="investigate_degradation", window=(0, spec_doc.horizon_s)),
        mode=mode,
        scenario=spec_doc,
        approval_mode=approval,
        backend_name=backend,
        limits=RunLimits(max_iterations=max_iterations, max_queries=max_queries),
    )
    run_id = runtime.create_run(run_spec, background=True)
    handle = runtime.get_handle(run_id)

    if approval == "interactive" and mode == "agentic":
        threading.Thread(target=_interactive_approver, args=(runtime, handle),
                         daemon=True).start()

    if watch:
        for event in handle.events.stream(1):
            click.echo(f"[{event.seq:03d}] {event.kind}: {wire.dumps(event.payload)}")
    state = runtime.wait(run_id, timeout=600)
    click.echo(f"run {run_id} finished: {state.status}")
    if state.report and state.report.get("top_cause_kind"):
        click.echo(f"top hypothesis: {state.report['top_cause_kind']}")
    if state.validation:
        click.echo(f"validation: {state.validation.outcome} "
                   f"(guard {state.validation.guard_kpi})")
    text = export_trace(handle)
    saved = obj["workspace"].save_trace(f"{scenario_name}-{run_id}", text)
    click.echo(f"trace saved: {saved}")
    if trace_out:
        with open(trace_out, "w", encoding="utf-8") as f:
            f.write(text)
        click.echo(f"trace written: {trace_out}")
    if state.status == "failed":
        sys.exit(1)


def _interactive_approver(runtime, handle):
    while not handle.terminal:
        pending = runtime.list_approvals()
        if pending:
            p = pending[0]
            click.echo("\n--- approval requested ---")
            click.echo(wire.dumps(p.action.to_payload()))
            decision = "approve" if click.confirm("apply this action?") else "reject"
            note = click.prompt("operator note", default="", show_default=False)
            runtime.decide_approval(p.approval_id, decision, note)
            return
        threading.Event().wait(0.1)


# -- approvals (against a running service) -----------------------------------------


@cli.group()
def approvals():
    """List and decide pending approvals on a running service."""


def _server_client(obj) -> httpx.Client:
    server = obj.get("server")
    if not server:
        raise ValidationError("approvals need --server (or RANLOOP_SERVER) pointing at a "
                              "running service")
    return httpx.Client(base_url=server, timeout=30)


def _raise_for_api_error(resp: httpx.Response) -> None:
    if resp.status_code >= 400:
        try:
            err = resp.json()["error"]
        except Exception:
            raise RanLoopError(f"service returned HTTP {resp.status_code}")
        exc = {
            "validation_error": ValidationError,
            "unsupported_intent": ValidationError,
            "not_found": NotFoundError,
        }.get(err.get("code"), RanLoopError)(err.get("message", "service error"),
                                             field_path=err.get("field_path"))
        raise exc


@approvals.command("list")
@click.pass_obj
def approvals_list(obj):
    with _server_client(obj) as client:
        resp = client.get("/approvals")
        _raise_for_api_error(resp)
        pending = resp.json()["approvals"]
    if not pending:
        click.echo("(no pending approvals)")
    for p in pending:
        action = p["action"]
        click.echo(f"{p['approval_id']}  run={p['run_id']}  {action['kind']} "
                   f"on {action['element_id']}")


@approvals.command("decide")
@click.argument("approval_id")
@click.argument("decision", type=click.Choice(["approve", "reject"]))
@click.option("--note", default="")
@click.pass_obj
def approvals_decide(obj, approval_id, decision, note):
    with _server_client(obj) as client:
        resp = client.post(f"/approvals/{approval_id}/decision",
                           json={"decision": decision, "note": note})
        _raise_for_api_error(resp)
    click.echo(f"{approval_id}: {decision}")


# -- traces ---------------------------------------------------------------------


@cli.group()
def trace():
    """Export and replay run traces."""


@trace.command("export")
@click.argument("run_id")
@click.option("-o", "--output", type=click.Path(), default=None)
@click.pass_obj
def trace_export(obj, run_id, output):
    """Fetch a run trace: from the --server when given, else from stored
    workspace traces (saved automatically by `ranloop run`)."""
    server = obj.get("server")
    if server:
        with httpx.Client(base_url=server, timeout=30) as client:
            resp = client.get(f"/runs/{run_id}/trace")
            _raise_for_api_error(resp)
            text = resp.text
    else:
        text = obj["workspace"].load_trace(run_id)
    if output:
        with open(output, "w", encoding="utf-8") as f:
            f.write(text)
        click.echo(f"trace written: {output}")
    else:
        click.echo(text, nl=False)


@trace.command("replay")
@click.argument("path", type=click.Path(exists=True))
def trace_replay(path):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    result = replay_trace(text)
    click.echo(wire.dumps({
        "original_status": result["original_status"],
        "replayed_status": result["replayed_status"],
        "status_match": result["status_match"],
        "original_event_count": result["original_event_count"],
        "replayed_event_count": result["replayed_event_count"],
        "trace_match": result["trace_match"],
    }))
    if not result["status_match"]:
        sys.exit(1)


# -- service -----------------------------------------------------------------------


@cli.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve(obj, host, port):
    """Start the HTTP service (API + event stream + static console)."""
    import uvicorn

    from ranloop.service.app import create_app

    cfg: ServiceConfig = obj["config"]
    app = create_app(cfg)
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port, log_level="warning")


if __name__ == "__main__":
    main()
