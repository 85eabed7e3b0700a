"""Default KPI catalogue: domains, improvement direction, aggregation rules."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class KpiDef:
    name: str
    unit: str
    lo: float
    hi: float
    higher_is_better: bool
    aggregation: str  # traffic_weighted_mean | arithmetic_mean | sum


KPI_DEFS: dict[str, KpiDef] = {
    k.name: k
    for k in (
        KpiDef("dl_throughput_mbps", "Mbps", 0.0, float("inf"), True, "traffic_weighted_mean"),
        KpiDef("prb_utilization_pct", "%", 0.0, 100.0, False, "arithmetic_mean"),
        KpiDef("rrc_setup_success_rate_pct", "%", 0.0, 100.0, True, "traffic_weighted_mean"),
        KpiDef("ho_success_rate_pct", "%", 0.0, 100.0, True, "traffic_weighted_mean"),
        KpiDef("call_drop_rate_pct", "%", 0.0, 100.0, False, "traffic_weighted_mean"),
    )
}

DEFAULT_KPIS = tuple(KPI_DEFS)

# prb_utilization doubles as the traffic proxy for weighted means.
TRAFFIC_WEIGHT_KPI = "prb_utilization_pct"


def clamp_to_domain(kpi: str, value: float) -> float:
    d = KPI_DEFS.get(kpi)
    if d is None:
        return value
    return min(max(value, d.lo), d.hi)


def in_domain(kpi: str, value: float) -> bool:
    d = KPI_DEFS.get(kpi)
    if d is None:
        return True
    return d.lo <= value <= d.hi
