"""Execution runtime for the three automation levels.

Workflow: fixed linear pipeline, stateless, no actions.
Agent: iterated plan/execute/reflect loop with run memory and limits.
Agentic: five role-scoped agents exchanging messages through the mailbox
router, with an approval gate and rollback-guarded validation.

Agents are cooperative actors inside the run thread: messages are delivered
and handled in deterministic order, which is what makes rule-backend traces
byte-reproducible. Wall-clock time never enters the trace; logical clocks do.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field

from ranloop.datastore import KpiSelector, OptimizationRecord
from ranloop.errors import (
    ConflictError,
    NotFoundError,
    RanLoopError,
    StateError,
    ValidationError,
)
from ranloop.orchestrator.context import RunContext
from ranloop.orchestrator.events import EventLog
from ranloop.orchestrator.memory import Memory
from ranloop.orchestrator.messages import ROLES, AgentMessage, MailboxRouter
from ranloop.orchestrator.plan import Intent, Plan, decompose_intent
from ranloop.reasoning import (
    EvidenceBundle,
    Hypothesis,
    ProposedAction,
    ReasoningPass,
    ReasoningTrace,
    RuleBackend,
)
from ranloop.simulator import ScenarioSpec
from ranloop.simulator.kpis import KPI_DEFS

log = logging.getLogger("ranloop.orchestrator")

MODES = ("workflow", "agent", "agentic")
APPROVAL_MODES = ("interactive", "auto_approve", "auto_reject")

TERMINAL_STATUSES = frozenset({"confirmed", "rolled_back", "completed", "failed"})
LEGAL_TRANSITIONS: dict[str, frozenset[str]] = {
    "running": frozenset({"awaiting_approval", "completed", "failed"}),
    "awaiting_approval": frozenset({"validating", "completed"}),
    "validating": frozenset({"confirmed", "rolled_back"}),
    "confirmed": frozenset(),
    "rolled_back": frozenset(),
    "completed": frozenset(),
    "failed": frozenset(),
}

AGENT_TIMEOUT_S = 60.0


@dataclass
class RunLimits:
    max_iterations: int = 3
    max_queries: int = 8

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1", field_path="limits.max_iterations")
        if self.max_queries < 0:
            raise ValidationError("max_queries must be >= 0", field_path="limits.max_queries")


@dataclass
class RunSpec:
    intent: Intent
    mode: str
    scenario: ScenarioSpec
    approval_mode: str = "interactive"
    backend_name: str = "rule"
    limits: RunLimits = field(default_factory=RunLimits)
    scripted_decisions: list[dict] = field(default_factory=list)  # used by trace replay

    def validate(self) -> None:
        self.intent.validate()
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode: {self.mode}", field_path="mode")
        if self.approval_mode not in APPROVAL_MODES:
            raise ValidationError(
                f"unknown approval mode: {self.approval_mode}", field_path="approval_mode"
            )
        self.limits.validate()


@dataclass
class PendingApproval:
    approval_id: str
    run_id: str
    action: ProposedAction
    hypothesis: Hypothesis
    precedents: list[OptimizationRecord]
    requested_at: int
    decision: str | None = None
    note: str = ""

    def to_payload(self) -> dict:
        return {
            "approval_id": self.approval_id,
            "run_id": self.run_id,
            "action": self.action.to_payload(),
            "hypothesis": self.hypothesis.to_payload(),
            "precedents": [r.record_id for r in self.precedents],
            "requested_at": self.requested_at,
            "decision": self.decision,
            "note": self.note,
        }


@dataclass
class ValidationOutcome:
    outcome: str  # confirmed | rolled_back
    kpi_delta: dict[str, float]
    pre_snapshot_id: str
    post_snapshot_id: str
    record_id: str
    guard_kpi: str
    pre_mean: float
    post_mean: float

    def to_payload(self) -> dict:
        return {
            "outcome": self.outcome,
            "kpi_delta": dict(sorted(self.kpi_delta.items())),
            "pre_snapshot_id": self.pre_snapshot_id,
            "post_snapshot_id": self.post_snapshot_id,
            "record_id": self.record_id,
            "guard_kpi": self.guard_kpi,
            "pre_mean": self.pre_mean,
            "post_mean": self.post_mean,
        }


@dataclass
class RunState:
    run_id: str
    mode: str
    intent: Intent
    approval_mode: str
    backend_name: str
    scenario_name: str
    seed: int
    status: str = "running"
    plan: Plan | None = None
    reasoning_trace: ReasoningTrace = field(default_factory=ReasoningTrace)
    message_log: list[AgentMessage] = field(default_factory=list)
    report: dict | None = None
    pending_approval: PendingApproval | None = None
    validation: ValidationOutcome | None = None
    error: dict | None = None

    def to_payload(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode,
            "status": self.status,
            "intent": self.intent.to_payload(),
            "approval_mode": self.approval_mode,
            "backend": self.backend_name,
            "scenario": self.scenario_name,
            "seed": self.seed,
            "pending_approval": self.pending_approval.to_payload()
            if self.pending_approval and self.pending_approval.decision is None
            else None,
            "report": self.report,
            "validation": self.validation.to_payload() if self.validation else None,
            "error": self.error,
        }


class RunHandle:
    """One run: state, event log, execution thread, and approval channel."""

    def __init__(self, run_id: str, spec: RunSpec, backend, agent_overrides=None,
                 seed_precedents=None, on_settled=None):
        self.spec = spec
        self.backend = backend
        self.state = RunState(
            run_id=run_id,
            mode=spec.mode,
            intent=spec.intent,
            approval_mode=spec.approval_mode,
            backend_name=getattr(backend, "name", spec.backend_name),
            scenario_name=spec.scenario.name,
            seed=spec.scenario.seed,
        )
        self.events = EventLog(run_id)
        self.ctx: RunContext | None = None
        self.router: MailboxRouter | None = None
        self.memory: Memory | None = None
        self.decisions: queue.Queue = queue.Queue()
        self.lock = threading.RLock()
        self.thread: threading.Thread | None = None
        self.agent_overrides = agent_overrides or {}
        self.seed_precedents = seed_precedents or []
        self.on_settled = on_settled
        self._approval_counter = 0
        self._scripted = list(spec.scripted_decisions)

    # -- state machine -------------------------------------------------------

    def transition(self, new_status: str, extra: dict | None = None) -> None:
        with self.lock:
            if new_status not in LEGAL_TRANSITIONS[self.state.status]:
                raise StateError(
                    f"illegal transition {self.state.status} -> {new_status}", field_path="status"
                )
            payload = {"from": self.state.status, "to": new_status}
            if extra:
                payload.update(extra)
            # The stream must show the transition before get_run can observe it.
            self.events.emit("status_change", payload)
            self.state.status = new_status
            if new_status in TERMINAL_STATUSES:
                self.events.close()
                if self.router is not None:
                    self.router.close()

    @property
    def terminal(self) -> bool:
        return self.state.status in TERMINAL_STATUSES

    # -- approvals -----------------------------------------------------------

    def next_approval_id(self) -> str:
        self._approval_counter += 1
        return f"appr-{self.state.run_id}-{self._approval_counter:02d}"

    def submit_decision(self, decision: str, note: str) -> None:
        self.decisions.put({"decision": decision, "note": note})

    def wait_decision(self) -> dict:
        if self._scripted:
            return self._scripted.pop(0)
        if self.spec.approval_mode == "auto_approve":
            return {"decision": "approve", "note": "auto-approved (test/demo mode)"}
        if self.spec.approval_mode == "auto_reject":
            return {"decision": "reject", "note": "auto-rejected (test/demo mode)"}
        return self.decisions.get()


class _StepFailure(RanLoopError):
    code = "step_failure"

    def __init__(self, step: str, cause: Exception):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


class _Execution:
    """Runs one RunHandle to a terminal status."""

    def __init__(self, handle: RunHandle):
        self.h = handle
        self.backend = handle.backend
        self.trace = handle.state.reasoning_trace

    # -- shared helpers --------------------------------------------------------

    def _step_event(self, step_id: str, action: str, summary: dict) -> None:
        self.h.events.emit("pass_completed", {"step": step_id, "action": action, **summary})

    def _pass_event(self, p: ReasoningPass) -> None:
        self.h.events.emit(
            "pass_completed",
            {
                "pass": p.kind,
                "backend": p.backend,
                "input_digest": p.input_digest,
                "hypotheses": [h.to_payload() for h in p.hypotheses],
                "queries": [q.to_payload() for q in p.queries],
            },
        )

    def _record_pass(self, kind: str, digest: str, hypotheses, queries, elapsed: float) -> None:
        p = ReasoningPass(
            kind=kind,
            input_digest=digest,
            hypotheses=list(hypotheses),
            queries=list(queries),
            backend=getattr(self.backend, "name", "rule"),
            elapsed_s=elapsed,
        )
        self.trace.record(p)
        self._pass_event(p)

    def _reflect(self, bundle, hypotheses, delta):
        t0 = time.monotonic()
        result = self.backend.reflect(bundle, hypotheses, delta)
        merged = bundle.merge(delta) if delta is not None else bundle
        self._record_pass("reflection", merged.digest(), result.hypotheses, [],
                          time.monotonic() - t0)
        for hyp, reason in result.retired:
            if self.h.memory is not None:
                self.h.memory.append("note", {"retired": hyp.id, "reason": reason})
        return result, merged

    def _execute_queries(self, ctx: RunContext, queries) -> EvidenceBundle | None:
        delta = None
        for q in queries:
            d = ctx.execute_query(q)
            if self.h.memory is not None:
                self.h.memory.append("selector", {"selector_key": q.selector_key()})
            delta = d if delta is None else delta.merge(d)
        return delta

    def _report(self, bundle, hypotheses, no_finding, extra=None) -> dict:
        report = {
            "no_finding": bool(no_finding),
            "hypotheses": [h.to_payload() for h in hypotheses],
            "top_cause_kind": hypotheses[0].cause_kind if hypotheses else None,
            "deviation_table": bundle.deviation_table.to_payload(),
            "passes": len(self.trace.passes),
        }
        if extra:
            report.update(extra)
        return report

    # -- workflow mode -----------------------------------------------------------

    def run_workflow(self, ctx: RunContext) -> dict:
        h = self.h
        step = "s1:query"
        try:
            plan = decompose_intent(h.spec.intent, {"mode": "workflow"})
            h.state.plan = plan
            probe = ctx.store.query_kpi(
                KpiSelector(level="cell", kpis=tuple(ctx.scenario.kpis),
                            time_range=h.spec.intent.window)
            )
            n_points = sum(len(v) for v in probe.values())
            if n_points == 0:
                raise ValidationError("no PM data covers the intent window")
            self._step_event("s1", "query", {"series": len(probe), "points": n_points})

            step = "s2:analyze"
            bundle = ctx.assemble_bundle()
            self._step_event("s2", "analyze", {"rows": len(bundle.deviation_table.rows)})

            step = "s3:reason"
            t0 = time.monotonic()
            initial = self.backend.reason_initial(bundle)
            self._record_pass("initial", bundle.digest(), initial.hypotheses,
                              initial.queries, time.monotonic() - t0)
            self._step_event("s3", "reason", {"hypotheses": len(initial.hypotheses)})

            step = "s4:reflect"
            result, bundle = self._reflect(bundle, initial.hypotheses, None)
            hypotheses = result.hypotheses
            self._step_event("s4", "reflect", {"hypotheses": len(hypotheses)})

            step = "s5:reflect"
            t0 = time.monotonic()
            queries = self.backend.refine_queries(self.trace, hypotheses)
            self._record_pass("refinement", bundle.digest(), hypotheses, queries,
                              time.monotonic() - t0)
            delta = self._execute_queries(ctx, queries)
            result, bundle = self._reflect(bundle, hypotheses, delta)
            hypotheses = result.hypotheses
            self._step_event("s5", "reflect", {"hypotheses": len(hypotheses),
                                               "followups": len(queries)})
            return self._report(bundle, hypotheses, initial.no_finding and not hypotheses)
        except RanLoopError as e:
            raise _StepFailure(step, e) from e

    # -- agent mode ---------------------------------------------------------------

    def run_agent(self, ctx: RunContext, limits: RunLimits) -> dict:
        h = self.h
        h.memory = Memory(cross_run=[r for r in ctx.store.optimization_records()
                                     if r.outcome != "pending"])
        plan = decompose_intent(h.spec.intent, {"mode": "agent"})
        h.state.plan = plan

        bundle = ctx.assemble_bundle()
        self._step_event("s1", "query", {"window": list(h.spec.intent.window)})
        self._step_event("s2", "analyze", {"rows": len(bundle.deviation_table.rows)})

        t0 = time.monotonic()
        initial = self.backend.reason_initial(bundle)
        self._record_pass("initial", bundle.digest(), initial.hypotheses, initial.queries,
                          time.monotonic() - t0)
        self._step_event("s3", "reason", {"hypotheses": len(initial.hypotheses)})
        hypotheses = initial.hypotheses
        h.memory.append("pass", {"kind": "initial", "hypotheses": len(hypotheses)})
        for hyp in hypotheses:
            h.memory.append("hypothesis", hyp.to_payload())

        iteration = 1
        queries_used = 0
        reason = None
        while True:
            if all(hyp.resolved() for hyp in hypotheses):
                reason = "resolved"
                break
            if iteration >= limits.max_iterations:
                reason = "limit"
                limit_kind = "iterations"
                break
            budget = limits.max_queries - queries_used
            queries = self.backend.refine_queries(self.trace, hypotheses) if budget > 0 else []
            queries = queries[: max(budget, 0)]
            if not queries:
                if limits.max_queries - queries_used <= 0:
                    reason = "limit"
                    limit_kind = "queries"
                else:
                    reason = "no_new_queries"
                break
            self._record_pass("refinement", bundle.digest(), hypotheses, queries, 0.0)
            queries_used += len(queries)
            delta = self._execute_queries(ctx, queries)
            result, bundle = self._reflect(bundle, hypotheses, delta)
            hypotheses = result.hypotheses
            iteration += 1
            h.memory.append("pass", {"kind": "reflection", "iteration": iteration,
                                     "hypotheses": len(hypotheses)})
            for hyp in hypotheses:
                h.memory.append("hypothesis", hyp.to_payload())

        extra = {
            "iterations": iteration,
            "termination_reason": reason,
            "queries_executed": queries_used,
            "memory_entries": len(h.memory),
        }
        if reason == "limit":
            extra["limit_kind"] = limit_kind
        self._step_event("s4", "reflect", {"iterations": iteration, "reason": reason})
        return self._report(bundle, hypotheses, initial.no_finding and not hypotheses, extra)

    # -- agentic mode -----------------------------------------------------------------

    def run_agentic(self, ctx: RunContext, limits: RunLimits) -> None:
        h = self.h
        router = MailboxRouter(h.state.run_id)
        h.router = router
        for role in ROLES:
            router.register(role)
        h.memory = Memory(cross_run=[r for r in ctx.store.optimization_records()
                                     if r.outcome != "pending"])

        plan = decompose_intent(h.spec.intent, {"mode": "agentic"})
        h.state.plan = plan

        handlers = {
            "analysis": lambda payload: self._analysis_agent(ctx, limits, payload),
            "historical": lambda payload: self._historical_agent(ctx, payload),
            "documentation": lambda payload: self._documentation_agent(payload),
            "validation": lambda payload: self._validation_agent(ctx, payload),
        }
        handlers.update(h.agent_overrides)

        diag = self._ask(router, handlers, "analysis", "diagnose_request",
                         {"window": list(h.spec.intent.window)})
        self._step_event("s2", "analyze", {"rows": diag["table_rows"]})
        hypotheses = diag["hypotheses"]

        elements = sorted({hyp.element_id for hyp in hypotheses})
        hist = self._ask(router, handlers, "historical", "precedents_request",
                         {"elements": elements})
        precedents = hist["records"]
        self._step_event("s6", "retrieve_precedents", {"records": len(precedents)})

        terms = sorted({hyp.kpi for hyp in hypotheses if hyp.kpi}
                       | {hyp.proposed_action.parameter for hyp in hypotheses
                          if hyp.proposed_action and hyp.proposed_action.parameter})
        docs = self._ask(router, handlers, "documentation", "docs_request", {"terms": terms})
        self._step_event("s7", "consult_docs", {"passages": len(docs["passages"])})

        action, motivating = self._merge_and_propose(ctx, hypotheses, precedents)
        report = {
            "no_finding": not hypotheses,
            "hypotheses": [hyp.to_payload() for hyp in hypotheses],
            "top_cause_kind": hypotheses[0].cause_kind if hypotheses else None,
            "deviation_table": diag["table"],
            "precedents": [r.record_id for r in precedents],
            "doc_excerpts": [d for d, _ in docs["passages"]],
            "iterations": diag["iterations"],
            "passes": len(self.trace.passes),
        }
        self._step_event("s8", "propose",
                         {"action": action.to_payload() if action else None})

        if action is None:
            h.state.report = report
            h.transition("completed", {"reason": "no_action_proposed"})
            return

        approval = PendingApproval(
            approval_id=h.next_approval_id(),
            run_id=h.state.run_id,
            action=action,
            hypothesis=motivating,
            precedents=precedents,
            requested_at=router.tick(),
        )
        h.state.pending_approval = approval
        h.events.emit("approval_requested", approval.to_payload())
        h.transition("awaiting_approval")

        decision = h.wait_decision()
        approval.decision = decision["decision"]
        approval.note = decision.get("note", "")

        if approval.decision != "approve":
            report["action_declined"] = action.to_payload()
            report["operator_note"] = approval.note
            h.state.report = report
            h.transition("completed", {
                "reason": "action_declined",
                "approval_id": approval.approval_id,
                "decision": approval.decision,
                "note": approval.note,
            })
            return

        h.transition("validating", {
            "approval_id": approval.approval_id,
            "decision": "approve",
            "note": approval.note,
        })
        try:
            outcome_payload = self._ask(router, handlers, "validation", "validate_request",
                                        {"action": action.to_payload()})
            outcome: ValidationOutcome = outcome_payload["outcome_obj"]
        except _StepFailure as e:
            # validate_and_guard mutates nothing before its snapshot and rolls
            # back on failure, so a safe rolled_back terminal is always truthful
            log.error("validation failed for %s: %s", h.state.run_id, e.cause)
            outcome = ValidationOutcome(
                outcome="rolled_back",
                kpi_delta={},
                pre_snapshot_id="",
                post_snapshot_id="",
                record_id="",
                guard_kpi=action.guard_kpi,
                pre_mean=0.0,
                post_mean=0.0,
            )
            h.state.error = {"step": e.step, "message": str(e.cause)}
        h.state.validation = outcome
        h.events.emit("validation_result", outcome.to_payload())
        self._step_event("s9", "validate", {"outcome": outcome.outcome})
        report["validation"] = outcome.to_payload()
        h.state.report = report
        h.transition(outcome.outcome)

    # -- agents -------------------------------------------------------------------

    def _ask(self, router, handlers, role, intent_tag, payload) -> dict:
        h = self.h
        request = AgentMessage(
            message_id=router.next_message_id(),
            correlation_id=h.state.run_id,
            sender="master",
            recipient=role,
            intent_tag=intent_tag,
            payload=payload,
            sent_at=router.tick(),
        )
        router.dispatch(request)
        h.state.message_log.append(request)
        h.events.emit("message_sent", request.to_payload())

        router.take(role)  # agent consumes its mailbox head
        response_payload = self._invoke_with_retry(role, handlers[role], payload)

        response = AgentMessage(
            message_id=router.next_message_id(),
            correlation_id=h.state.run_id,
            sender=role,
            recipient="master",
            intent_tag=intent_tag.replace("_request", "_result"),
            payload=_wire_view(response_payload),
            sent_at=router.tick(),
        )
        router.dispatch(response)
        h.state.message_log.append(response)
        h.events.emit("message_sent", response.to_payload())
        router.take("master")
        return response_payload

    def _invoke_with_retry(self, role: str, handler, payload) -> dict:
        last: Exception | None = None
        for attempt in (1, 2):  # one retry, then the run fails naming the role
            t0 = time.monotonic()
            try:
                result = handler(payload)
                if time.monotonic() - t0 > AGENT_TIMEOUT_S:
                    raise TimeoutError(f"agent {role} exceeded {AGENT_TIMEOUT_S}s")
                return result
            except Exception as e:  # noqa: BLE001 - agent failures are retried once
                last = e
                log.warning("agent %s attempt %d failed: %s", role, attempt, e)
        raise _StepFailure(f"agent:{role}", last)

    def _analysis_agent(self, ctx: RunContext, limits: RunLimits, payload) -> dict:
        bundle = ctx.assemble_bundle()
        t0 = time.monotonic()
        initial = self.backend.reason_initial(bundle)
        self._record_pass("initial", bundle.digest(), initial.hypotheses, initial.queries,
                          time.monotonic() - t0)
        hypotheses = initial.hypotheses
        iteration = 1
        queries_used = 0
        while hypotheses and not all(hyp.resolved() for hyp in hypotheses):
            if iteration >= limits.max_iterations:
                break
            budget = limits.max_queries - queries_used
            if budget <= 0:
                break
            queries = self.backend.refine_queries(self.trace, hypotheses)[:budget]
            if not queries:
                break
            self._record_pass("refinement", bundle.digest(), hypotheses, queries, 0.0)
            queries_used += len(queries)
            delta = self._execute_queries(ctx, queries)
            result, bundle = self._reflect(bundle, hypotheses, delta)
            hypotheses = result.hypotheses
            iteration += 1
        return {
            "hypotheses": hypotheses,
            "table": bundle.deviation_table.to_payload(),
            "table_rows": len(bundle.deviation_table.rows),
            "iterations": iteration,
        }

    def _historical_agent(self, ctx: RunContext, payload) -> dict:
        merged: dict[str, OptimizationRecord] = {}
        for element in payload.get("elements", []):
            cells = (
                ctx.topology.member_cells("cell", element)
                if ctx.topology.exists("cell", element)
                else ctx.topology.member_cells("node", element)
                if ctx.topology.exists("node", element)
                else []
            )
            target = cells[0] if cells else element
            for kind in ("revert_config_change", "adjust_parameter", "open_ticket"):
                for rec in ctx.store.query_precedents(target, kind, 3):
                    merged.setdefault(rec.record_id, rec)
        records = sorted(merged.values(), key=lambda r: (-r.created_at, r.record_id))
        return {"records": records, "record_ids": [r.record_id for r in records]}

    def _documentation_agent(self, payload) -> dict:
        from ranloop.reasoning import retrieve_doc_passages

        terms = payload.get("terms", [])
        if not terms:
            return {"passages": []}
        res = retrieve_doc_passages(list(terms), k=3)
        return {"passages": [(doc_id, passage) for doc_id, passage, _ in res.hits]}

    def _validation_agent(self, ctx: RunContext, payload) -> dict:
        action = self.h.state.pending_approval.action
        outcome = validate_and_guard(ctx, action, run_id=self.h.state.run_id)
        if self.h.memory is not None:
            self.h.memory.append("note", {"validation": outcome.outcome,
                                          "record_id": outcome.record_id})
        if self.h.on_settled is not None:
            settled = next(r for r in ctx.store.optimization_records()
                           if r.record_id == outcome.record_id)
            self.h.on_settled(settled)
        return {"outcome": outcome.outcome, "outcome_obj": outcome}

    def _merge_and_propose(self, ctx, hypotheses, precedents):
        """Master owns proposals: take the top resolved hypothesis's action."""
        for hyp in hypotheses:
            if hyp.proposed_action is None or not hyp.resolved() or hyp.confidence < 0.5:
                continue
            action = hyp.proposed_action
            if action.kind == "adjust_parameter" and action.to_value is None:
                current = ctx.sim.configs[action.element_id].value_of(action.parameter)
                lo, hi = ctx.topology.config_bounds[action.parameter]
                target = min(max(current + action.value_delta, lo), hi)
                from dataclasses import replace as _replace

                action = _replace(action, from_value=current, to_value=target)
            return action, hyp
        return None, None


def validate_and_guard(ctx: RunContext, action: ProposedAction, run_id: str = "run") -> ValidationOutcome:
    """Snapshot, apply, monitor the evaluation window, then confirm or roll back.

    Degradation = guarded KPI mean over the evaluation window worse than the
    pre-action mean by strictly more than the guard threshold, in the KPI's
    own improvement direction. Snapshot restore makes rollback exact on
    configuration values.
    """
    action.validate()
    iv = ctx.scenario.interval_s
    eval_n = action.evaluation_window
    t_act = ctx.sim.current_time
    member = ctx.topology.member_cells(action.level, action.element_id)

    pre = _window_means(ctx, member, (t_act - eval_n * iv, t_act))
    snapshot = ctx.store.snapshot_config()

    params_before: dict[str, float] = {}
    params_after: dict[str, float] = {}
    try:
        if action.kind in ("revert_config_change", "adjust_parameter"):
            target = action.element_id
            params_before[action.parameter] = ctx.sim.configs[target].value_of(action.parameter)
            ctx.sim.apply_config(target, action.parameter, action.to_value, source="action")
            params_after[action.parameter] = action.to_value
        ctx.sync_cm()
    except RanLoopError:
        # apply failed: nothing was written, config is untouched
        raise

    ctx.store.ingest_pm(ctx.sim.advance(eval_n))
    post = _window_means(ctx, member, (t_act, t_act + eval_n * iv))

    guard_kpi = action.guard_kpi
    pre_mean = pre.get(guard_kpi, 0.0)
    post_mean = post.get(guard_kpi, 0.0)
    g = action.guard_threshold_pct / 100.0
    higher_better = KPI_DEFS[guard_kpi].higher_is_better
    if higher_better:
        degraded = post_mean < pre_mean * (1.0 - g)
    else:
        degraded = post_mean > pre_mean * (1.0 + g)

    kpi_delta = {k: post.get(k, 0.0) - pre.get(k, 0.0) for k in sorted(pre)}

    if degraded:
        ctx.store.restore_config(snapshot.snapshot_id)
        ctx.sync_cm()
        outcome_kind = "rolled_back"
    else:
        outcome_kind = "confirmed"
    post_snapshot = ctx.store.snapshot_config()

    record = OptimizationRecord(
        record_id=f"opt-{action.action_id}",
        created_at=t_act,
        element_id=action.element_id,
        level=action.level,
        action_kind=action.kind,
        parameters_before=params_before,
        parameters_after=params_after,
        hypothesis_id=action.hypothesis_id,
        cause_kind=action.hypothesis_id.split("-")[1] if "-" in action.hypothesis_id else "",
        outcome=outcome_kind,
        kpi_delta=kpi_delta,
    )
    ctx.store.record_optimization(record)

    return ValidationOutcome(
        outcome=outcome_kind,
        kpi_delta=kpi_delta,
        pre_snapshot_id=snapshot.snapshot_id,
        post_snapshot_id=post_snapshot.snapshot_id,
        record_id=record.record_id,
        guard_kpi=guard_kpi,
        pre_mean=pre_mean,
        post_mean=post_mean,
    )


def _window_means(ctx: RunContext, cells, window) -> dict[str, float]:
    sel = KpiSelector(level="cell", kpis=tuple(ctx.scenario.kpis),
                      time_range=window, element_ids=tuple(cells))
    data = ctx.store.query_kpi(sel)
    means: dict[str, float] = {}
    for kpi in ctx.scenario.kpis:
        values = [v for (el, k), pts in data.items() if k == kpi for _, v in pts]
        means[kpi] = sum(values) / len(values) if values else 0.0
    return means


def _wire_view(value):
    """Deep view of a payload keeping only wire-encodable values; rich objects
    are replaced by their to_payload() form or dropped."""
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            w = _wire_view(v)
            if w is not _DROP:
                out[str(k)] = w
        return out
    if isinstance(value, (list, tuple)):
        return [w for w in (_wire_view(v) for v in value) if w is not _DROP]
    if hasattr(value, "to_payload"):
        return _wire_view(value.to_payload())
    return _DROP


class _Drop:
    pass


_DROP = _Drop()


class Runtime:
    """Manages concurrent runs: creation, approval routing, event streaming."""

    def __init__(self):
        self._runs: dict[str, RunHandle] = {}
        self._lock = threading.RLock()
        self._counter = 0
        self._cross_run: list[OptimizationRecord] = []

    # -- lifecycle -------------------------------------------------------------

    def create_run(self, spec: RunSpec, background: bool = True,
                   agent_overrides=None) -> str:
        spec.validate()
        backend = self._make_backend(spec)
        with self._lock:
            self._counter += 1
            run_id = f"run-{self._counter:04d}"
            handle = RunHandle(
                run_id, spec, backend,
                agent_overrides=agent_overrides,
                seed_precedents=self._seed_precedents(),
                on_settled=self._remember_outcome,
            )
            self._runs[run_id] = handle
        if background:
            handle.thread = threading.Thread(
                target=self._execute, args=(handle,), name=run_id, daemon=True
            )
            handle.thread.start()
        else:
            self._execute(handle)
        return run_id

    def _make_backend(self, spec: RunSpec):
        if spec.backend_name == "rule":
            return RuleBackend()
        from ranloop.reasoning import BackendConfig, ExternalBackend

        return ExternalBackend(BackendConfig.from_env())

    def _seed_precedents(self) -> list[OptimizationRecord]:
        seeded = []
        for i, rec in enumerate(self._cross_run):
            seeded.append(
                OptimizationRecord(
                    record_id=f"xr-{i:04d}-{rec.record_id}",
                    created_at=rec.created_at,
                    element_id=rec.element_id,
                    level=rec.level,
                    action_kind=rec.action_kind,
                    parameters_before=rec.parameters_before,
                    parameters_after=rec.parameters_after,
                    hypothesis_id=rec.hypothesis_id,
                    cause_kind=rec.cause_kind,
                    outcome=rec.outcome,
                    kpi_delta=rec.kpi_delta,
                )
            )
        return seeded

    def _remember_outcome(self, record: OptimizationRecord) -> None:
        with self._lock:
            self._cross_run.append(record)

    def _execute(self, handle: RunHandle) -> None:
        ex = _Execution(handle)
        try:
            ctx = RunContext.prepare(
                handle.spec.scenario,
                window=handle.spec.intent.window,
                seed_precedents=handle.seed_precedents,
            )
            handle.ctx = ctx
            if handle.spec.mode == "workflow":
                handle.state.report = ex.run_workflow(ctx)
                handle.transition("completed", {"reason": "pipeline_finished"})
            elif handle.spec.mode == "agent":
                handle.state.report = ex.run_agent(ctx, handle.spec.limits)
                handle.transition("completed", {"reason": "loop_terminated"})
            else:
                ex.run_agentic(ctx, handle.spec.limits)
        except _StepFailure as e:
            log.error("run %s failed at %s: %s", handle.state.run_id, e.step, e.cause)
            handle.state.error = {"step": e.step, "message": str(e.cause)}
            if not handle.terminal:
                handle.transition("failed", {"step": e.step, "message": str(e.cause)})
        except Exception as e:  # noqa: BLE001 - runs must always reach a terminal status
            log.exception("run %s crashed", handle.state.run_id)
            handle.state.error = {"step": "internal", "message": str(e)}
            if not handle.terminal:
                handle.transition("failed", {"step": "internal", "message": str(e)})

    # -- accessors ----------------------------------------------------------------

    def get_handle(self, run_id: str) -> RunHandle:
        handle = self._runs.get(run_id)
        if handle is None:
            raise NotFoundError(f"unknown run id: {run_id}")
        return handle

    def get_run(self, run_id: str) -> RunState:
        return self.get_handle(run_id).state

    def wait(self, run_id: str, timeout: float = 120.0) -> RunState:
        handle = self.get_handle(run_id)
        if handle.thread is not None:
            handle.thread.join(timeout)
        return handle.state

    def list_runs(self) -> list[RunState]:
        with self._lock:
            return [h.state for h in self._runs.values()]

    # -- approvals ----------------------------------------------------------------

    def list_approvals(self) -> list[PendingApproval]:
        with self._lock:
            out = []
            for h in self._runs.values():
                p = h.state.pending_approval
                if p is not None and p.decision is None and h.state.status == "awaiting_approval":
                    out.append(p)
            return sorted(out, key=lambda p: (p.run_id, p.approval_id))

    def decide_approval(self, approval_id: str, decision: str, note: str = "") -> dict:
        if decision not in ("approve", "reject"):
            raise ValidationError(f"decision must be approve or reject, got {decision}",
                                  field_path="decision")
        with self._lock:
            for h in self._runs.values():
                p = h.state.pending_approval
                if p is not None and p.approval_id == approval_id:
                    if p.decision is not None or h.state.status != "awaiting_approval":
                        raise ConflictError(f"approval {approval_id} already decided")
                    h.submit_decision(decision, note)
                    return {"approval_id": approval_id, "decision": decision, "note": note}
        raise NotFoundError(f"unknown approval id: {approval_id}")
