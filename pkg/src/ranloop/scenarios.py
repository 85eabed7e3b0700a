"""Bundled scenario families: every seed and scenario used by the test and
acceptance suites is constructed here, so runs are reproducible from the repo.

Step directions are constrained per KPI so injected shifts do not saturate
percent domains (a +8 sigma step on a 98% success rate would clip at 100).
"""

from __future__ import annotations

import numpy as np

from ranloop.simulator import Baseline, ConfigEffectRule, ScenarioEvent, ScenarioSpec

BASELINES: dict[str, Baseline] = {
    "dl_throughput_mbps": Baseline(mean=150.0, diurnal_amplitude=20.0, noise_sigma=5.0),
    "prb_utilization_pct": Baseline(mean=55.0, diurnal_amplitude=10.0, noise_sigma=3.0),
    "rrc_setup_success_rate_pct": Baseline(mean=98.0, diurnal_amplitude=0.5, noise_sigma=0.4),
    "ho_success_rate_pct": Baseline(mean=97.0, diurnal_amplitude=0.5, noise_sigma=0.5),
    "call_drop_rate_pct": Baseline(mean=1.5, diurnal_amplitude=0.2, noise_sigma=0.15),
}

# Allowed step direction per KPI: +1 up, -1 down, 0 either.
STEP_DIRECTIONS = {
    "dl_throughput_mbps": 0,
    "prb_utilization_pct": 0,
    "rrc_setup_success_rate_pct": -1,
    "ho_success_rate_pct": -1,
    "call_drop_rate_pct": +1,
}


def topology_6() -> dict:
    return {
        "clusters": ["cl1"],
        "regions": [{"id": "r1", "cluster": "cl1"}],
        "bands": ["b1", "b2"],
        "sectors": ["s1", "s2", "s3"],
        "nodes": [{"id": "n1", "region": "r1"}, {"id": "n2", "region": "r1"}],
        "cells": [
            {"id": "c1", "node": "n1", "band": "b1", "sector": "s1"},
            {"id": "c2", "node": "n1", "band": "b1", "sector": "s2"},
            {"id": "c3", "node": "n1", "band": "b2", "sector": "s3"},
            {"id": "c4", "node": "n2", "band": "b1", "sector": "s1"},
            {"id": "c5", "node": "n2", "band": "b1", "sector": "s2"},
            {"id": "c6", "node": "n2", "band": "b2", "sector": "s3"},
        ],
    }


def topology_20() -> dict:
    """1 cluster, 2 regions, 5 nodes x 4 cells, 2 bands, 4 sectors."""
    nodes = [{"id": f"n{i}", "region": "r1" if i <= 3 else "r2"} for i in range(1, 6)]
    cells = []
    for i in range(1, 21):
        node = f"n{(i - 1) // 4 + 1}"
        cells.append(
            {
                "id": f"c{i:02d}",
                "node": node,
                "band": "b1" if i % 2 else "b2",
                "sector": f"s{(i - 1) % 4 + 1}",
            }
        )
    return {
        "clusters": ["cl1"],
        "regions": [{"id": "r1", "cluster": "cl1"}, {"id": "r2", "cluster": "cl1"}],
        "bands": ["b1", "b2"],
        "sectors": ["s1", "s2", "s3", "s4"],
        "nodes": nodes,
        "cells": cells,
    }


def _base(name, seed, horizon, topology, events=(), config_effects=(), kpis=None):
    kpis = tuple(kpis) if kpis else tuple(BASELINES)
    return ScenarioSpec(
        name=name,
        topology=topology,
        horizon=horizon,
        seed=seed,
        kpis=kpis,
        baseline={k: BASELINES[k] for k in kpis},
        events=list(events),
        config_effects=list(config_effects),
    )


def event_free(seed: int, horizon: int = 672, topology: dict | None = None) -> ScenarioSpec:
    return _base(f"event-free-{seed}", seed, horizon, topology or topology_20())


def cell_degradation(seed: int, cell: str = "c1", horizon: int = 288,
                     magnitude_sigmas: float = -8.0) -> ScenarioSpec:
    ev = ScenarioEvent(kind="step_shift", level="cell", element=cell,
                       onset=horizon // 2, kpi="dl_throughput_mbps",
                       magnitude=None, magnitude_sigmas=magnitude_sigmas)
    return _base(f"cell-degradation-{cell}-{seed}", seed, horizon, topology_6(), events=[ev])


def cm_regression(seed: int, cell: str = "c1", horizon: int = 288) -> ScenarioSpec:
    onset = horizon // 2
    ev = ScenarioEvent(
        kind="config_change", level="cell", element=cell, onset=onset,
        payload={"parameter": "tx_power_dbm", "value": 43.0,
                 "kpi_effects": {"dl_throughput_mbps": -40.0}},
    )
    return _base(f"cm-regression-{cell}-{seed}", seed, horizon, topology_6(), events=[ev])


def band_fault(seed: int, band: str = "b1", horizon: int = 288,
               topology: dict | None = None, magnitude: float = -35.0) -> ScenarioSpec:
    ev = ScenarioEvent(kind="step_shift", level="band", element=band,
                       onset=horizon // 2, kpi="dl_throughput_mbps", magnitude=magnitude)
    return _base(f"band-fault-{band}-{seed}", seed, horizon,
                 topology or topology_20(), events=[ev])


def hardware_fault(seed: int, cell: str = "c3", horizon: int = 288) -> ScenarioSpec:
    onset = horizon // 2
    topo = topology_6()
    node = next(c["node"] for c in topo["cells"] if c["id"] == cell)
    events = [
        ScenarioEvent(kind="step_shift", level="cell", element=cell, onset=onset,
                      kpi="rrc_setup_success_rate_pct", magnitude=-5.0),
        ScenarioEvent(kind="fm_alarm", level="node", element=node, onset=onset,
                      payload={"code": "BASEBAND_FAULT", "severity": "critical"}),
    ]
    return _base(f"hardware-fault-{cell}-{seed}", seed, horizon, topo, events=events)


def ambiguous(seed: int, horizon: int = 288) -> ScenarioSpec:
    """Two same-node cells shift together: no alarm, no CM change, band
    coverage stays below 80%, siblings not clean -> rule engine lands on
    unknown and keeps digging."""
    onset = horizon // 2
    events = [
        ScenarioEvent(kind="step_shift", level="cell", element="c1", onset=onset,
                      kpi="dl_throughput_mbps", magnitude=-35.0),
        ScenarioEvent(kind="step_shift", level="cell", element="c2", onset=onset,
                      kpi="dl_throughput_mbps", magnitude=-35.0),
    ]
    return _base(f"ambiguous-{seed}", seed, horizon, topology_6(), events=events)


def adversarial_action(seed: int, cell: str = "c1", horizon: int = 288) -> ScenarioSpec:
    """Cell degradation whose scripted remedy makes things 30% worse: the
    rollback guard must fire."""
    spec = cell_degradation(seed, cell=cell, horizon=horizon)
    worsen = ConfigEffectRule(
        element=cell,
        parameter="electrical_tilt_deg",
        kpi_effects={"dl_throughput_mbps": -0.30 * BASELINES["dl_throughput_mbps"].mean},
    )
    return _base(f"adversarial-action-{cell}-{seed}", seed, horizon, topology_6(),
                 events=list(spec.events), config_effects=[worsen])


def improving_action(seed: int, cell: str = "c1", horizon: int = 288) -> ScenarioSpec:
    """Cell degradation whose scripted remedy recovers ~25% of the mean."""
    spec = cell_degradation(seed, cell=cell, horizon=horizon)
    improve = ConfigEffectRule(
        element=cell,
        parameter="electrical_tilt_deg",
        kpi_effects={"dl_throughput_mbps": 0.25 * BASELINES["dl_throughput_mbps"].mean},
    )
    return _base(f"improving-action-{cell}-{seed}", seed, horizon, topology_6(),
                 events=list(spec.events), config_effects=[improve])


def detection_case(seed: int, horizon: int = 672) -> tuple[ScenarioSpec, dict]:
    """One 20-cell scenario with a single injected step >= 5 sigma at a seeded
    cell/KPI/onset; returns (scenario, injection ground truth)."""
    rng = np.random.default_rng(seed)
    topo = topology_20()
    cell = f"c{int(rng.integers(1, 21)):02d}"
    kpi = list(BASELINES)[int(rng.integers(0, len(BASELINES)))]
    onset = int(rng.integers(48, horizon - 48))
    sigmas = float(rng.uniform(5.0, 10.0))
    direction = STEP_DIRECTIONS[kpi]
    if direction == 0:
        direction = -1 if rng.random() < 0.5 else 1
    ev = ScenarioEvent(kind="step_shift", level="cell", element=cell, onset=onset,
                       kpi=kpi, magnitude=None, magnitude_sigmas=direction * sigmas)
    spec = _base(f"detect-{seed}", seed, horizon, topo, events=[ev])
    truth = {"cell": cell, "kpi": kpi, "onset": onset,
             "magnitude_sigmas": direction * sigmas}
    return spec, truth


def single_cause_suite() -> list[tuple[ScenarioSpec, str]]:
    """Ten single-cause scenarios with their expected top cause kind."""
    suite: list[tuple[ScenarioSpec, str]] = []
    for seed, cell in ((101, "c1"), (102, "c4"), (103, "c6")):
        suite.append((cm_regression(seed, cell=cell), "config_regression"))
    for seed, cell in ((201, "c3"), (202, "c6"), (203, "c1")):
        suite.append((hardware_fault(seed, cell=cell), "hardware_fault"))
    for seed, band in ((301, "b1"), (302, "b2")):
        suite.append((band_fault(seed, band=band, topology=topology_6()),
                      "band_level_interference"))
    for seed, cell in ((401, "c3"), (402, "c6")):
        suite.append((cell_degradation(seed, cell=cell), "cell_local_degradation"))
    return suite
