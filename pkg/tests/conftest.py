import pytest

from ranloop.simulator import Baseline, ScenarioSpec, build_topology

TOPOLOGY_6 = {
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

BASELINE_ALL = {
    "dl_throughput_mbps": Baseline(mean=150.0, diurnal_amplitude=20.0, noise_sigma=5.0),
    "prb_utilization_pct": Baseline(mean=55.0, diurnal_amplitude=10.0, noise_sigma=3.0),
    "rrc_setup_success_rate_pct": Baseline(mean=98.0, diurnal_amplitude=0.5, noise_sigma=0.4),
    "ho_success_rate_pct": Baseline(mean=97.0, diurnal_amplitude=0.5, noise_sigma=0.5),
    "call_drop_rate_pct": Baseline(mean=1.5, diurnal_amplitude=0.2, noise_sigma=0.15),
}


def make_scenario(name="base", seed=42, horizon=96, events=(), kpis=None, config_effects=(),
                  topology=None, baseline=None, interval_s=900):
    return ScenarioSpec(
        name=name,
        topology=topology or TOPOLOGY_6,
        horizon=horizon,
        seed=seed,
        interval_s=interval_s,
        kpis=tuple(kpis) if kpis else tuple(BASELINE_ALL),
        baseline=dict(baseline or BASELINE_ALL),
        events=list(events),
        config_effects=list(config_effects),
    )


@pytest.fixture
def topology6():
    return build_topology(TOPOLOGY_6)
