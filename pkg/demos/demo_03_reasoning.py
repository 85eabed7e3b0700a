# Reflective reasoning walkthrough: evidence in, ranked hypotheses out, then
# revision as follow-up queries bring new evidence.

from ranloop import scenarios
from ranloop.orchestrator import RunContext
from ranloop.reasoning import (
    ReasoningPass,
    ReasoningTrace,
    RuleBackend,
    retrieve_doc_passages,
)

backend = RuleBackend()

# Prepare the world for a configuration-regression scenario: at interval 144
# someone raised tx_power on c1 and throughput dropped 40 Mbps.
ctx = RunContext.prepare(scenarios.cm_regression(9))
bundle = ctx.assemble_bundle()
print(f"evidence: {len(bundle.deviation_table.rows)} table rows, "
      f"{len(bundle.alarms)} alarms, {len(bundle.recent_config_changes)} CM changes")

# Initial pass: the rule oracle walks R1..R5 in precedence order.
initial = backend.reason_initial(bundle)
for h in initial.hypotheses:
    print(f"  {h.confidence:.2f} {h.cause_kind} @ {h.level}/{h.element_id}  ({h.rationale})")
top = initial.hypotheses[0]
print("proposed action:", top.proposed_action.kind, "->",
      top.proposed_action.parameter, "=", top.proposed_action.to_value)

# Reflection with an empty delta is the identity.
unchanged = backend.reflect(bundle, initial.hypotheses, None)
print("\nempty-delta reflection is identity:",
      unchanged.hypotheses == initial.hypotheses)

# A cell-local case escalates: siblings appearing in new evidence merge the
# hypothesis into band scope and retire the narrow one.
ctx2 = RunContext.prepare(scenarios.cell_degradation(11))
bundle2 = ctx2.assemble_bundle()
prior = backend.reason_initial(bundle2).hypotheses
print("\nprior:", [(h.cause_kind, h.element_id, h.confidence) for h in prior])

trace = ReasoningTrace()
trace.record(ReasoningPass(kind="initial", input_digest=bundle2.digest(),
                           hypotheses=prior, queries=[], backend=backend.name))
queries = backend.refine_queries(trace, prior)
print("follow-ups:", [(q.kind, dict(q.params)) for q in queries])

delta = None
for q in queries:
    d = ctx2.execute_query(q)
    delta = d if delta is None else delta.merge(d)
trace.record(ReasoningPass(kind="refinement", input_digest=bundle2.digest(),
                           hypotheses=prior, queries=queries, backend=backend.name))

reflected = backend.reflect(bundle2, prior, delta)
print("after reflection:",
      [(h.cause_kind, h.element_id, h.confidence, "resolved" if h.resolved() else "open")
       for h in reflected.hypotheses])
for hyp, reason in reflected.retired:
    print("retired:", hyp.id, "--", reason)

# The documentation corpus answers parameter/KPI questions lexically.
hits = retrieve_doc_passages("electrical tilt degradation")
print("\ntop doc for 'electrical tilt degradation':", hits.hits[0][0])
