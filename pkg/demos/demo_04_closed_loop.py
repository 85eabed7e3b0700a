# Closed-loop walkthrough: the three automation modes on the same fault, then
# the approval gate and the rollback guard on a remedy that backfires.

from ranloop import scenarios
from ranloop.orchestrator import Intent, RunLimits, RunSpec, Runtime, export_trace


def launch(rt, spec, mode, approval="auto_approve"):
    run_id = rt.create_run(
        RunSpec(
            intent=Intent(goal_kind="investigate_degradation",
                          window=(0, spec.horizon_s)),
            mode=mode,
            scenario=spec,
            approval_mode=approval,
            limits=RunLimits(max_iterations=3, max_queries=8),
        ),
        background=False,
    )
    return rt.get_run(run_id), rt.get_handle(run_id)


rt = Runtime()

# The same configuration regression, escalating levels of automation.
for mode in ("workflow", "agent", "agentic"):
    state, handle = launch(rt, scenarios.cm_regression(31), mode)
    line = f"{mode:9s} -> {state.status:10s} top={state.report['top_cause_kind']}"
    if state.report.get("iterations"):
        line += f" iterations={state.report['iterations']}"
    if state.validation:
        line += f" validation={state.validation.outcome}"
    print(line)

# Agentic mode on a remedy scripted to backfire: the guard rolls it back.
state, handle = launch(rt, scenarios.adversarial_action(32), "agentic")
v = state.validation
print(f"\nadversarial remedy: status={state.status}")
print(f"  guarded {v.guard_kpi}: pre {v.pre_mean:.1f} -> post {v.post_mean:.1f} "
      f"(guard 10%); snapshot {v.pre_snapshot_id} restored")
cfg = handle.ctx.sim.configs["c1"]
print(f"  c1 electrical_tilt_deg back to {cfg.electrical_tilt_deg}")

# Reject path: nothing is ever written without approval.
state, handle = launch(rt, scenarios.cm_regression(33), "agentic", approval="auto_reject")
print(f"\nauto-reject: status={state.status}, "
      f"action declined={state.report['action_declined'] is not None}, "
      f"CM writes={[c.source for c in handle.ctx.sim.cm_log]}")

# Message passing between the five agents is fully logged.
state, handle = launch(rt, scenarios.cm_regression(34), "agentic")
print("\nagent conversation:")
for m in state.message_log:
    print(f"  {m.message_id} {m.sender:12s} -> {m.recipient:12s} {m.intent_tag}")

# The exported trace replays to the same terminal status, byte for byte.
trace_text = export_trace(handle)
print(f"\ntrace: {len(trace_text.splitlines())} lines; "
      f"first event: {trace_text.splitlines()[2][:80]}...")
