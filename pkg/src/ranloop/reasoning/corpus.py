"""Bundled knowledge corpus (parameter descriptions, KPI definitions, runbooks)
and deterministic lexical retrieval over it."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ranloop.errors import ValidationError

BUILTIN_CORPUS: dict[str, str] = {
    "param-tx-power": (
        "tx_power_dbm sets the downlink transmit power of a cell in dBm. "
        "Raising transmit power extends coverage but increases interference to "
        "neighbour cells on the same band; lowering it shrinks the service "
        "area. Typical macro range is 10 to 46 dBm. Power changes take effect "
        "within one sampling interval and commonly move downlink throughput "
        "and call drop rate."
    ),
    "param-electrical-tilt": (
        "electrical_tilt_deg controls the antenna electrical downtilt in "
        "degrees. Increasing tilt focuses coverage near the site, reducing "
        "overshoot interference; too much tilt creates coverage holes at the "
        "cell edge. Tilt tuning is the standard remedy for a single cell "
        "degrading while its neighbours stay healthy."
    ),
    "param-handover-offset": (
        "handover_offset_db biases the handover decision between neighbour "
        "cells in dB. A positive offset makes the serving cell stickier; a "
        "negative offset hands users over earlier. Wrong offsets show up as "
        "poor handover success rate and ping-pong handovers."
    ),
    "kpi-dl-throughput": (
        "dl_throughput_mbps is the mean downlink user throughput of a cell in "
        "Mbps. Sustained drops point at interference, congestion, transport "
        "faults, or a configuration regression such as a transmit power or "
        "tilt change."
    ),
    "kpi-prb-utilization": (
        "prb_utilization_pct is the share of physical resource blocks in use. "
        "It doubles as the traffic proxy when weighting cell KPIs into node, "
        "band, or cluster aggregates. Sustained utilization above 85 percent "
        "indicates capacity overload."
    ),
    "kpi-rrc-setup": (
        "rrc_setup_success_rate_pct is the percentage of RRC connection "
        "attempts that succeed. Dips correlate with signalling overload, "
        "admission control misconfiguration, or hardware faults on the "
        "baseband unit."
    ),
    "kpi-ho-success": (
        "ho_success_rate_pct is the percentage of attempted handovers that "
        "complete. Degradations usually trace to neighbour list errors or "
        "handover offset changes."
    ),
    "kpi-call-drop": (
        "call_drop_rate_pct is the percentage of established sessions released "
        "abnormally. Rising drop rate together with falling throughput on one "
        "band suggests external interference."
    ),
    "runbook-interference": (
        "Band-level interference runbook: when most cells on one frequency "
        "band shift together while other bands stay flat, suspect an external "
        "interferer or a neighbour operator retune. Open a spectrum "
        "investigation ticket; cell-local parameter changes will not fix a "
        "band-wide interference problem."
    ),
    "runbook-hardware": (
        "Hardware fault runbook: a KPI shift coinciding with fault management "
        "alarms (within about half an hour) on the owning gNodeB indicates a "
        "hardware or transport fault. Dispatch field maintenance; do not "
        "attempt parameter optimization until the alarm clears."
    ),
    "runbook-rollback": (
        "Rollback policy: every applied configuration change keeps the prior "
        "snapshot. If the guarded KPI degrades beyond the guard threshold "
        "during the evaluation window, restore the snapshot and record the "
        "outcome as rolled back; otherwise confirm and persist the new state."
    ),
    "runbook-config-regression": (
        "Configuration regression runbook: when a KPI degrades within a few "
        "hours of a CM change on the same cell, the first remedy is reverting "
        "that change and re-evaluating before any further optimization."
    ),
}

STOPWORDS = frozenset(
    "a an and are as at be by for from has have in into is it of on or that the "
    "this to was were what when where which with".split()
)

_TOKEN = re.compile(r"[a-z0-9_]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN.findall(text.lower()) if t not in STOPWORDS]


@dataclass
class RetrievalResult:
    hits: list[tuple[str, str, float]] = field(default_factory=list)  # (doc id, passage, score)
    warnings: list[str] = field(default_factory=list)


def retrieve_doc_passages(
    query_terms: str | list[str],
    corpus: dict[str, str] | None = None,
    k: int = 3,
) -> RetrievalResult:
    """Top-k passages by summed term frequency; ties break by doc id."""
    docs = BUILTIN_CORPUS if corpus is None else corpus
    if not docs:
        raise ValidationError("documentation corpus is empty")
    result = RetrievalResult()
    if k <= 0:
        return result
    if isinstance(query_terms, str):
        terms = tokenize(query_terms)
    else:
        terms = [t for q in query_terms for t in tokenize(q)]
    if not terms:
        result.warnings.append("query reduced to stopwords; nothing to retrieve")
        return result

    scored: list[tuple[float, str]] = []
    for doc_id in sorted(docs):
        tokens = tokenize(docs[doc_id])
        score = float(sum(tokens.count(t) for t in terms))
        if score > 0:
            scored.append((score, doc_id))
    scored.sort(key=lambda s: (-s[0], s[1]))
    result.hits = [(doc_id, docs[doc_id], score) for score, doc_id in scored[:k]]
    return result
