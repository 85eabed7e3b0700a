"""Reasoning backends behind one interface: the deterministic rule oracle and
an optional external chat-completion client with strict structured output.

External model output must conform to the published schema (see
docs/schemas/reasoning_output.schema.json); violations surface as typed parse
errors with the offending path, and the client retries at most `retry_limit`
times with the error appended before failing.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass

import httpx

from ranloop import wire
from ranloop.errors import BackendError, BackendParseError, BackendTimeoutError
from ranloop.reasoning import rules
from ranloop.reasoning.types import (
    ACTION_KINDS,
    CAUSE_KINDS,
    QUERY_KINDS,
    EvidenceBundle,
    FollowUpQuery,
    Hypothesis,
    ProposedAction,
    ReasoningResult,
    ReasoningTrace,
)
from ranloop.simulator.topology import LEVELS

OUTPUT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ReasoningOutput",
    "type": "object",
    "required": ["hypotheses"],
    "properties": {
        "hypotheses": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cause_kind", "element_id", "level", "confidence"],
                "properties": {
                    "id": {"type": "string"},
                    "cause_kind": {"enum": list(CAUSE_KINDS)},
                    "element_id": {"type": "string"},
                    "level": {"enum": list(LEVELS)},
                    "kpi": {"type": ["string", "null"]},
                    "confidence": {"type": "number", "minimum": 0, "maximum": 1},
                    "evidence_refs": {"type": "array", "items": {"type": "string"}},
                    "rationale": {"type": "string"},
                    "proposed_action": {
                        "type": ["object", "null"],
                        "required": ["kind", "element_id", "level", "guard_kpi"],
                        "properties": {
                            "kind": {"enum": list(ACTION_KINDS)},
                            "element_id": {"type": "string"},
                            "level": {"enum": list(LEVELS)},
                            "guard_kpi": {"type": "string"},
                            "parameter": {"type": ["string", "null"]},
                            "from_value": {"type": ["number", "null"]},
                            "to_value": {"type": ["number", "null"]},
                            "value_delta": {"type": ["number", "null"]},
                            "evaluation_window": {"type": "integer", "minimum": 1},
                            "guard_threshold_pct": {"type": "number", "minimum": 0},
                            "cm_ref": {"type": ["array", "null"]},
                        },
                    },
                },
            },
        },
        "queries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "params", "reason"],
                "properties": {
                    "kind": {"enum": list(QUERY_KINDS)},
                    "params": {"type": "object"},
                    "reason": {"type": "string"},
                },
            },
        },
    },
}

SCHEMA_VERSION = "1"


def validate_backend_output(raw: str, bundle: EvidenceBundle | None = None) -> ReasoningResult:
    """Accept only output conforming to the declared shape; parse errors carry
    the offending path."""
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise BackendParseError(f"output is not valid JSON: {e}", field_path="$") from e
    if not isinstance(doc, dict):
        raise BackendParseError("output root must be an object", field_path="$")
    raw_hyps = doc.get("hypotheses")
    if not isinstance(raw_hyps, list):
        raise BackendParseError("hypotheses must be a list", field_path="hypotheses")

    hypotheses = [
        _parse_hypothesis(h, i, bundle) for i, h in enumerate(raw_hyps)
    ]
    raw_queries = doc.get("queries", [])
    if not isinstance(raw_queries, list):
        raise BackendParseError("queries must be a list", field_path="queries")
    queries = [_parse_query(q, i) for i, q in enumerate(raw_queries)]
    hypotheses.sort(key=lambda h: (-h.confidence, h.id))
    return ReasoningResult(
        hypotheses=hypotheses, queries=queries, no_finding=not hypotheses
    )


def _parse_hypothesis(h, i, bundle) -> Hypothesis:
    path = f"hypotheses[{i}]"
    if not isinstance(h, dict):
        raise BackendParseError("hypothesis must be an object", field_path=path)
    cause = h.get("cause_kind")
    if cause not in CAUSE_KINDS:
        raise BackendParseError(
            f"unknown cause_kind: {cause!r}", field_path=f"{path}.cause_kind"
        )
    level = h.get("level")
    if level not in LEVELS:
        raise BackendParseError(f"unknown level: {level!r}", field_path=f"{path}.level")
    element = h.get("element_id")
    if not isinstance(element, str) or not element:
        raise BackendParseError("element_id must be a non-empty string", field_path=f"{path}.element_id")
    if bundle is not None and not bundle.topology.exists(level, element):
        raise BackendParseError(
            f"element {element} does not exist at level {level}",
            field_path=f"{path}.element_id",
        )
    confidence = h.get("confidence")
    if not isinstance(confidence, (int, float)) or isinstance(confidence, bool):
        raise BackendParseError("confidence must be a number", field_path=f"{path}.confidence")
    if not 0.0 <= float(confidence) <= 1.0:
        raise BackendParseError(
            f"confidence {confidence} outside [0, 1]", field_path=f"{path}.confidence"
        )
    refs = h.get("evidence_refs", [])
    if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
        raise BackendParseError("evidence_refs must be a list of strings",
                                field_path=f"{path}.evidence_refs")
    if bundle is not None:
        for j, ref in enumerate(refs):
            if not bundle.resolves(ref):
                raise BackendParseError(
                    f"unresolvable evidence ref: {ref}",
                    field_path=f"{path}.evidence_refs[{j}]",
                )
    action = None
    raw_action = h.get("proposed_action")
    if raw_action is not None:
        if cause == "unknown":
            raise BackendParseError(
                "unknown-cause hypothesis cannot carry a proposed action",
                field_path=f"{path}.proposed_action",
            )
        action = _parse_action(raw_action, f"{path}.proposed_action", h)
    hid = h.get("id") or f"h-{cause}-{level}-{element}"
    return Hypothesis(
        id=hid,
        cause_kind=cause,
        element_id=element,
        level=level,
        confidence=float(confidence),
        evidence_refs=tuple(refs),
        proposed_action=action,
        rationale=str(h.get("rationale", "")),
        kpi=h.get("kpi"),
    )


def _parse_action(a, path, h) -> ProposedAction:
    if not isinstance(a, dict):
        raise BackendParseError("proposed_action must be an object", field_path=path)
    kind = a.get("kind")
    if kind not in ACTION_KINDS:
        raise BackendParseError(f"unknown action kind: {kind!r}", field_path=f"{path}.kind")
    cm_ref = a.get("cm_ref")
    try:
        action = ProposedAction(
            action_id=a.get("action_id", f"act-{kind}-{a.get('element_id')}"),
            kind=kind,
            element_id=a.get("element_id", h.get("element_id", "")),
            level=a.get("level", h.get("level", "cell")),
            hypothesis_id=h.get("id", ""),
            guard_kpi=a.get("guard_kpi", h.get("kpi") or ""),
            parameter=a.get("parameter"),
            from_value=a.get("from_value"),
            to_value=a.get("to_value"),
            value_delta=a.get("value_delta"),
            evaluation_window=int(a.get("evaluation_window", 8)),
            guard_threshold_pct=float(a.get("guard_threshold_pct", 10.0)),
            cm_ref=tuple(cm_ref) if cm_ref else None,
        )
        action.validate()
    except BackendParseError:
        raise
    except Exception as e:
        raise BackendParseError(str(e), field_path=path) from e
    return action


def _parse_query(q, i) -> FollowUpQuery:
    path = f"queries[{i}]"
    if not isinstance(q, dict):
        raise BackendParseError("query must be an object", field_path=path)
    kind = q.get("kind")
    if kind not in QUERY_KINDS:
        raise BackendParseError(f"unknown query kind: {kind!r}", field_path=f"{path}.kind")
    params = q.get("params")
    if not isinstance(params, dict):
        raise BackendParseError("params must be an object", field_path=f"{path}.params")
    return FollowUpQuery.make(kind, reason=str(q.get("reason", "")), **params)


class RuleBackend:
    """Pure, reentrant oracle; every operation is a function of its inputs."""

    name = rules.BACKEND_NAME

    def reason_initial(self, bundle: EvidenceBundle) -> ReasoningResult:
        return rules.reason_initial(bundle)

    def reflect(self, bundle, prior, new_evidence) -> rules.ReflectResult:
        return rules.reflect(bundle, prior, new_evidence)

    def refine_queries(self, trace: ReasoningTrace, hypotheses) -> list[FollowUpQuery]:
        return rules.refine_queries(trace, hypotheses)


@dataclass
class BackendConfig:
    endpoint: str = ""  # empty = external backend disabled
    model: str = ""
    token_env: str = "RANLOOP_LLM_TOKEN"
    timeout_s: float = 30.0
    retry_limit: int = 2
    max_in_flight: int = 2

    @classmethod
    def from_env(cls, env=os.environ) -> "BackendConfig":
        return cls(
            endpoint=env.get("RANLOOP_LLM_ENDPOINT", ""),
            model=env.get("RANLOOP_LLM_MODEL", ""),
            token_env=env.get("RANLOOP_LLM_TOKEN_ENV", "RANLOOP_LLM_TOKEN"),
            timeout_s=float(env.get("RANLOOP_LLM_TIMEOUT_S", "30")),
            retry_limit=int(env.get("RANLOOP_LLM_RETRY_LIMIT", "2")),
            max_in_flight=int(env.get("RANLOOP_LLM_MAX_IN_FLIGHT", "2")),
        )


SYSTEM_INSTRUCTION = (
    "You are a RAN diagnostics engine. Reply with ONE JSON object and nothing "
    "else, conforming exactly to this JSON schema (schema_version "
    f"{SCHEMA_VERSION}):\n"
)


class ExternalBackend:
    """Chat-completion-style client with strict output validation and bounded
    repair retries; failures are typed, never silent empties."""

    name = "external"

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        if not config.endpoint:
            raise BackendError("external backend requires a configured endpoint")
        self.config = config
        headers = {}
        token = os.environ.get(config.token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(
            base_url=config.endpoint,
            timeout=config.timeout_s,
            headers=headers,
            transport=transport,
        )
        self._slots = threading.Semaphore(config.max_in_flight)

    def close(self) -> None:
        self._client.close()

    # -- operations ---------------------------------------------------------

    def reason_initial(self, bundle: EvidenceBundle) -> ReasoningResult:
        prompt = (
            "Initial reasoning pass. Evidence bundle follows; propose root-cause "
            "hypotheses (sorted by confidence) and follow-up queries.\n"
            + _bundle_payload(bundle)
        )
        return self._structured_call(prompt, bundle)

    def reflect(self, bundle, prior, new_evidence) -> rules.ReflectResult:
        if bundle.is_empty_delta(new_evidence):
            return rules.ReflectResult(hypotheses=list(prior))
        merged = bundle.merge(new_evidence)
        prompt = (
            "Self-reflection pass. Re-assess the prior hypotheses against the "
            "merged evidence: keep (possibly re-scored), merge into broader "
            "scope, or drop falsified ones.\nPrior hypotheses:\n"
            + wire.dumps([h.to_payload() for h in prior])
            + "\nMerged evidence:\n"
            + _bundle_payload(merged)
        )
        result = self._structured_call(prompt, merged)
        kept_ids = {h.id for h in result.hypotheses}
        retired = [(p, "not retained by external backend reflection")
                   for p in prior if p.id not in kept_ids]
        return rules.ReflectResult(hypotheses=result.hypotheses, retired=retired)

    def refine_queries(self, trace: ReasoningTrace, hypotheses) -> list[FollowUpQuery]:
        issued = sorted(trace.issued_selector_keys())
        prompt = (
            "Refinement pass. Produce follow-up queries ONLY for hypotheses with "
            "confidence strictly between 0.2 and 0.8; never repeat an issued "
            "selector.\nHypotheses:\n"
            + wire.dumps([h.to_payload() for h in hypotheses])
            + "\nAlready issued selectors:\n"
            + wire.dumps(issued)
        )
        result = self._structured_call(prompt, None)
        seen = set(issued)
        out = []
        for q in result.queries:
            if q.selector_key() not in seen:
                seen.add(q.selector_key())
                out.append(q)
        return out

    # -- transport ----------------------------------------------------------

    def _structured_call(self, prompt: str, bundle) -> ReasoningResult:
        messages = [
            {"role": "system", "content": SYSTEM_INSTRUCTION + json.dumps(OUTPUT_SCHEMA)},
            {"role": "user", "content": prompt},
        ]
        last_error: BackendParseError | None = None
        for _attempt in range(self.config.retry_limit + 1):
            raw = self._complete(messages)
            try:
                return validate_backend_output(raw, bundle)
            except BackendParseError as e:
                last_error = e
                messages.append({"role": "assistant", "content": raw})
                messages.append(
                    {
                        "role": "user",
                        "content": "Your output was rejected: "
                        f"{e.message} (at {e.field_path}). Reply again with one "
                        "valid JSON object only.",
                    }
                )
        raise BackendError(
            f"backend output failed validation after {self.config.retry_limit} retries: "
            f"{last_error.message}",
            field_path=last_error.field_path,
        )

    def _complete(self, messages) -> str:
        with self._slots:
            try:
                resp = self._client.post(
                    "/chat/completions",
                    json={"model": self.config.model, "messages": messages, "temperature": 0},
                )
            except httpx.TimeoutException as e:
                raise BackendTimeoutError(
                    f"backend timed out after {self.config.timeout_s}s"
                ) from e
            except httpx.HTTPError as e:
                raise BackendError(f"backend transport error: {e}") from e
        if resp.status_code != 200:
            raise BackendError(f"backend returned HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as e:
            raise BackendParseError(
                "response missing choices[0].message.content", field_path="choices"
            ) from e


def _bundle_payload(bundle: EvidenceBundle) -> str:
    return wire.dumps(
        {
            "window": list(bundle.window),
            "deviation_table": bundle.deviation_table.to_payload(),
            "alarms": [
                {
                    "element_id": a.element_id,
                    "level": a.level,
                    "timestamp": a.timestamp,
                    "code": a.code,
                    "severity": a.severity,
                }
                for a in bundle.alarms
            ],
            "recent_config_changes": [
                {
                    "element_id": c.element_id,
                    "parameter": c.parameter,
                    "timestamp": c.timestamp,
                    "old_value": c.old_value,
                    "new_value": c.new_value,
                }
                for c in bundle.recent_config_changes
            ],
            "precedents": [r.record_id for r in bundle.precedents],
            "doc_excerpts": [{"doc_id": d, "passage": p} for d, p in bundle.doc_excerpts],
        }
    )


def make_backend(kind: str, config: BackendConfig | None = None):
    if kind == "rule":
        return RuleBackend()
    if kind == "external":
        return ExternalBackend(config or BackendConfig.from_env())
    raise BackendError(f"unknown backend kind: {kind}")
