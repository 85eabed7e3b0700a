"""Execution runtime for the three automation levels: Workflow, AI Agent, and
multi-agent Agentic mode with approval gating and rollback-guarded actions."""

from ranloop.orchestrator.context import RunContext
from ranloop.orchestrator.events import EVENT_KINDS, EventLog, EventRecord
from ranloop.orchestrator.memory import Memory, MemoryEntry
from ranloop.orchestrator.messages import (
    INTENT_TAGS,
    ROLES,
    AgentMessage,
    DeliveryReceipt,
    MailboxRouter,
)
from ranloop.orchestrator.plan import (
    GOAL_KINDS,
    IMPLEMENTED_GOALS,
    Intent,
    Plan,
    PlanStep,
    UnsupportedIntentError,
    decompose_intent,
)
from ranloop.orchestrator.runtime import (
    APPROVAL_MODES,
    LEGAL_TRANSITIONS,
    MODES,
    TERMINAL_STATUSES,
    PendingApproval,
    RunHandle,
    RunLimits,
    RunSpec,
    RunState,
    Runtime,
    ValidationOutcome,
    validate_and_guard,
)
from ranloop.orchestrator.tracefmt import export_trace, parse_trace, replay_trace

__all__ = [
    "APPROVAL_MODES",
    "AgentMessage",
    "DeliveryReceipt",
    "EVENT_KINDS",
    "EventLog",
    "EventRecord",
    "GOAL_KINDS",
    "IMPLEMENTED_GOALS",
    "INTENT_TAGS",
    "Intent",
    "LEGAL_TRANSITIONS",
    "MODES",
    "MailboxRouter",
    "Memory",
    "MemoryEntry",
    "PendingApproval",
    "Plan",
    "PlanStep",
    "ROLES",
    "RunContext",
    "RunHandle",
    "RunLimits",
    "RunSpec",
    "RunState",
    "Runtime",
    "TERMINAL_STATUSES",
    "UnsupportedIntentError",
    "ValidationOutcome",
    "export_trace",
    "parse_trace",
    "replay_trace",
    "validate_and_guard",
]
