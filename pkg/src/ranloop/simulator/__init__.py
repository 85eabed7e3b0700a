"""Deterministic synthetic 5G RAN: topology, KPI streams, scripted faults,
and closed-loop response to configuration changes."""

from ranloop.simulator.engine import (
    CellConfig,
    CmChange,
    FmAlarm,
    KpiSample,
    SimulationRun,
    emit_fm_alarms,
    export_samples,
    generate_stream,
    parse_samples,
)
from ranloop.simulator.kpis import DEFAULT_KPIS, KPI_DEFS, TRAFFIC_WEIGHT_KPI
from ranloop.simulator.scenario import (
    Baseline,
    ConfigEffectRule,
    ScenarioEvent,
    ScenarioSpec,
    dump_scenario,
    load_scenario,
    load_scenario_file,
    scenario_from_dict,
    scenario_to_dict,
)
from ranloop.simulator.topology import (
    LEVELS,
    NETWORK,
    CellDescriptor,
    NetworkTopology,
    NodeDescriptor,
    build_topology,
)

__all__ = [
    "Baseline",
    "CellConfig",
    "CellDescriptor",
    "CmChange",
    "ConfigEffectRule",
    "DEFAULT_KPIS",
    "FmAlarm",
    "KPI_DEFS",
    "KpiSample",
    "LEVELS",
    "NETWORK",
    "NetworkTopology",
    "NodeDescriptor",
    "ScenarioEvent",
    "ScenarioSpec",
    "SimulationRun",
    "TRAFFIC_WEIGHT_KPI",
    "build_topology",
    "dump_scenario",
    "emit_fm_alarms",
    "export_samples",
    "generate_stream",
    "load_scenario",
    "load_scenario_file",
    "parse_samples",
    "scenario_from_dict",
    "scenario_to_dict",
]
