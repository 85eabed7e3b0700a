"""Intents and dependency-aware plans (see docs/plan-templates.md)."""

from __future__ import annotations

from dataclasses import dataclass, field

from ranloop.errors import ValidationError

GOAL_KINDS = ("investigate_degradation", "minimize_latency", "balance_load", "reduce_energy")
IMPLEMENTED_GOALS = ("investigate_degradation",)

STEP_ACTIONS = (
    "query",
    "analyze",
    "reason",
    "reflect",
    "retrieve_precedents",
    "consult_docs",
    "propose",
    "validate",
)


class UnsupportedIntentError(ValidationError):
    code = "unsupported_intent"


@dataclass(frozen=True)
class Intent:
    goal_kind: str
    window: tuple[int, int]
    level: str = "cluster"
    element_id: str | None = None  # None = whole network

    def validate(self) -> None:
        if self.goal_kind not in GOAL_KINDS:
            raise ValidationError(f"unknown goal kind: {self.goal_kind}", field_path="goal_kind")
        if self.window[0] >= self.window[1]:
            raise ValidationError("intent window is empty", field_path="window")

    def to_payload(self) -> dict:
        return {
            "goal_kind": self.goal_kind,
            "window": {"start": self.window[0], "end": self.window[1]},
            "level": self.level,
            "element_id": self.element_id,
        }


@dataclass(frozen=True)
class PlanStep:
    step_id: str
    action: str
    params: tuple[tuple[str, object], ...] = ()
    depends_on: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        return {
            "step_id": self.step_id,
            "action": self.action,
            "params": dict(self.params),
            "depends_on": list(self.depends_on),
        }


@dataclass
class Plan:
    steps: list[PlanStep] = field(default_factory=list)

    def validate(self) -> None:
        ids = [s.step_id for s in self.steps]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate plan step ids", field_path="steps")
        known = set(ids)
        for s in self.steps:
            if s.action not in STEP_ACTIONS:
                raise ValidationError(f"unknown step action: {s.action}", field_path=s.step_id)
            for dep in s.depends_on:
                if dep not in known:
                    raise ValidationError(
                        f"step {s.step_id} depends on unknown step {dep}", field_path=s.step_id
                    )
        # cycle check by repeated pruning of satisfied steps
        remaining = {s.step_id: set(s.depends_on) for s in self.steps}
        while remaining:
            ready = [sid for sid, deps in remaining.items() if not deps]
            if not ready:
                raise ValidationError("plan dependency graph has a cycle", field_path="steps")
            for sid in ready:
                del remaining[sid]
            for deps in remaining.values():
                deps.difference_update(ready)

    def to_payload(self) -> dict:
        return {"steps": [s.to_payload() for s in self.steps]}


def decompose_intent(intent: Intent, context: dict) -> Plan:
    """Plan templates per mode; deterministic for fixed inputs.

    Goal kinds beyond degradation investigation are declared but rejected with
    a typed error naming the implemented set.
    """
    intent.validate()
    if intent.goal_kind not in IMPLEMENTED_GOALS:
        raise UnsupportedIntentError(
            f"goal kind {intent.goal_kind} is not implemented; implemented kinds: "
            f"{', '.join(IMPLEMENTED_GOALS)}",
            field_path="goal_kind",
        )
    mode = context.get("mode", "workflow")
    scope = (("level", intent.level), ("element_id", intent.element_id or "*"))
    steps = [
        PlanStep("s1", "query", scope + (("window", list(intent.window)),)),
        PlanStep("s2", "analyze", depends_on=("s1",)),
        PlanStep("s3", "reason", depends_on=("s2",)),
        PlanStep("s4", "reflect", depends_on=("s3",)),
        PlanStep("s5", "reflect", (("phase", "post_followup"),), depends_on=("s4",)),
    ]
    if mode == "agentic":
        steps += [
            PlanStep("s6", "retrieve_precedents", depends_on=("s2",)),
            PlanStep("s7", "consult_docs", depends_on=("s3",)),
            PlanStep("s8", "propose", depends_on=("s5", "s6", "s7")),
            PlanStep("s9", "validate", depends_on=("s8",)),
        ]
    plan = Plan(steps=steps)
    plan.validate()
    return plan
