"""Reasoning layer: evidence bundles in, hypotheses and follow-up queries out,
through the three-step reflective loop, behind a swappable backend."""

from ranloop.reasoning.backend import (
    OUTPUT_SCHEMA,
    BackendConfig,
    ExternalBackend,
    RuleBackend,
    make_backend,
    validate_backend_output,
)
from ranloop.reasoning.corpus import BUILTIN_CORPUS, RetrievalResult, retrieve_doc_passages
from ranloop.reasoning.rules import ReflectResult, reason_initial, reflect, refine_queries
from ranloop.reasoning.types import (
    ACTION_KINDS,
    CAUSE_KINDS,
    QUERY_KINDS,
    RESOLUTION_BAND,
    EvidenceBundle,
    FollowUpQuery,
    Hypothesis,
    ProposedAction,
    ReasoningPass,
    ReasoningResult,
    ReasoningTrace,
)

__all__ = [
    "ACTION_KINDS",
    "BUILTIN_CORPUS",
    "BackendConfig",
    "CAUSE_KINDS",
    "EvidenceBundle",
    "ExternalBackend",
    "FollowUpQuery",
    "Hypothesis",
    "OUTPUT_SCHEMA",
    "ProposedAction",
    "QUERY_KINDS",
    "RESOLUTION_BAND",
    "ReasoningPass",
    "ReasoningResult",
    "ReasoningTrace",
    "ReflectResult",
    "RetrievalResult",
    "RuleBackend",
    "make_backend",
    "reason_initial",
    "reflect",
    "refine_queries",
    "retrieve_doc_passages",
    "validate_backend_output",
]
