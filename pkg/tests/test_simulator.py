import numpy as np
import pytest

from ranloop.errors import NotFoundError, ValidationError
from ranloop.simulator import (
    Baseline,
    ScenarioEvent,
    SimulationRun,
    build_topology,
    emit_fm_alarms,
    export_samples,
    generate_stream,
    parse_samples,
)
from ranloop.simulator.scenario import ConfigEffectRule

from conftest import TOPOLOGY_6, make_scenario


def series_of(samples, cell, kpi):
    return [(s.timestamp, s.value) for s in samples if s.element_id == cell and s.kpi == kpi]


def values_of(samples, cell, kpi):
    return np.array([s.value for s in samples if s.element_id == cell and s.kpi == kpi])


class TestBuildTopology:
    def test_two_nodes_three_cells_each(self):
        topo = build_topology(TOPOLOGY_6)
        assert len(topo.cells) == 6
        assert topo.member_cells("node", "n1") == ["c1", "c2", "c3"]
        assert topo.bands == {"b1", "b2"}

    def test_dangling_band_reference_names_offender(self):
        spec = {
            "clusters": ["cl1"],
            "regions": [{"id": "r1", "cluster": "cl1"}],
            "bands": ["b1"],
            "sectors": ["s1"],
            "nodes": [{"id": "n1", "region": "r1"}],
            "cells": [{"id": "c1", "node": "n1", "band": "n78", "sector": "s1"}],
        }
        with pytest.raises(ValidationError, match="n78"):
            build_topology(spec)

    def test_duplicate_cell_id(self):
        spec = {
            "clusters": ["cl1"],
            "regions": [{"id": "r1", "cluster": "cl1"}],
            "bands": ["b1"],
            "sectors": ["s1"],
            "nodes": [{"id": "n1", "region": "r1"}],
            "cells": [
                {"id": "c1", "node": "n1", "band": "b1", "sector": "s1"},
                {"id": "c1", "node": "n1", "band": "b1", "sector": "s1"},
            ],
        }
        with pytest.raises(ValidationError, match="duplicate cell id: c1"):
            build_topology(spec)

    def test_every_cell_reachable_from_exactly_one_cluster(self):
        # 1 cluster, 2 regions, 4 nodes, 12 cells; oracle: explicit graph traversal.
        spec = {
            "clusters": ["cl1"],
            "regions": [{"id": "r1", "cluster": "cl1"}, {"id": "r2", "cluster": "cl1"}],
            "bands": ["b1", "b2"],
            "sectors": ["s1", "s2", "s3"],
            "nodes": [
                {"id": f"n{i}", "region": "r1" if i <= 2 else "r2"} for i in range(1, 5)
            ],
            "cells": [
                {
                    "id": f"c{j}",
                    "node": f"n{(j - 1) // 3 + 1}",
                    "band": "b1" if j % 2 else "b2",
                    "sector": f"s{(j - 1) % 3 + 1}",
                }
                for j in range(1, 13)
            ],
        }
        topo = build_topology(spec)

        # Traversal oracle: cluster -> regions -> nodes -> cells.
        reachable = set()
        for region, cluster in topo.regions.items():
            assert cluster == "cl1"
            for node in topo.nodes.values():
                if node.region == region:
                    for c in topo.cells.values():
                        if c.node == node.node_id:
                            reachable.add(c.cell_id)
        assert reachable == set(topo.cells)
        for cid in topo.cells:
            assert topo.member_cells("cluster", "cl1").count(cid) == 1


class TestGenerateStream:
    def test_zero_noise_flat_baseline(self):
        spec = make_scenario(
            kpis=("dl_throughput_mbps",),
            baseline={"dl_throughput_mbps": Baseline(mean=100.0)},
        )
        topo = build_topology(spec.topology)
        samples = generate_stream(topo, spec)
        assert len(samples) == 96 * 6
        assert all(s.value == 100.0 for s in samples)

    def test_timestamps_cover_one_day(self):
        spec = make_scenario(horizon=96, kpis=("dl_throughput_mbps",),
                             baseline={"dl_throughput_mbps": Baseline(mean=100.0)})
        topo = build_topology(spec.topology)
        samples = generate_stream(topo, spec)
        ts = sorted({s.timestamp for s in samples})
        assert ts == list(range(0, 86400, 900))
        assert ts[-1] == 85500

    def test_step_shift_against_event_free_run(self):
        step = ScenarioEvent(
            kind="step_shift", level="cell", element="c1", onset=50,
            kpi="dl_throughput_mbps", magnitude=-30.0,
        )
        base = make_scenario(seed=9, baseline={
            "dl_throughput_mbps": Baseline(mean=100.0, diurnal_amplitude=0.0, noise_sigma=1.0)},
            kpis=("dl_throughput_mbps",))
        faulty = make_scenario(seed=9, events=[step], baseline=base.baseline, kpis=base.kpis)
        topo = build_topology(base.topology)
        clean = generate_stream(topo, base)
        shifted = generate_stream(topo, faulty)

        c1_clean = values_of(clean, "c1", "dl_throughput_mbps")
        c1_shift = values_of(shifted, "c1", "dl_throughput_mbps")
        delta = c1_shift - c1_clean
        assert np.all(delta[:50] == 0)
        assert np.allclose(delta[50:], -30.0)
        assert np.all(c1_shift[50:] < 70 + 5)
        # siblings bit-identical (locality)
        for cell in ("c2", "c3", "c4", "c5", "c6"):
            assert np.array_equal(
                values_of(clean, cell, "dl_throughput_mbps"),
                values_of(shifted, cell, "dl_throughput_mbps"),
            )

    def test_determinism_bit_identical(self):
        spec = make_scenario(seed=1234)
        topo = build_topology(spec.topology)
        assert generate_stream(topo, spec) == generate_stream(topo, spec)

    def test_superposition_of_two_events(self):
        ev_a = ScenarioEvent(kind="step_shift", level="cell", element="c1", onset=30,
                             kpi="dl_throughput_mbps", magnitude=-20.0)
        ev_b = ScenarioEvent(kind="transient_spike", level="cell", element="c1", onset=60,
                             kpi="dl_throughput_mbps", magnitude=15.0, duration=4)
        baseline = {"dl_throughput_mbps": Baseline(mean=200.0, diurnal_amplitude=5.0, noise_sigma=2.0)}
        kw = dict(seed=5, kpis=("dl_throughput_mbps",), baseline=baseline)
        topo = build_topology(TOPOLOGY_6)
        free = values_of(generate_stream(topo, make_scenario(**kw)), "c1", "dl_throughput_mbps")
        only_a = values_of(generate_stream(topo, make_scenario(events=[ev_a], **kw)), "c1", "dl_throughput_mbps")
        only_b = values_of(generate_stream(topo, make_scenario(events=[ev_b], **kw)), "c1", "dl_throughput_mbps")
        both = values_of(generate_stream(topo, make_scenario(events=[ev_a, ev_b], **kw)), "c1", "dl_throughput_mbps")
        assert np.allclose(both - free, (only_a - free) + (only_b - free))

    def test_band_event_fans_out_only_to_member_cells(self):
        ev = ScenarioEvent(kind="step_shift", level="band", element="b1", onset=10,
                           kpi="dl_throughput_mbps", magnitude=-25.0)
        kw = dict(seed=3, kpis=("dl_throughput_mbps",),
                  baseline={"dl_throughput_mbps": Baseline(mean=100.0, noise_sigma=1.0)})
        topo = build_topology(TOPOLOGY_6)
        clean = generate_stream(topo, make_scenario(**kw))
        fault = generate_stream(topo, make_scenario(events=[ev], **kw))
        for cell in topo.member_cells("band", "b1"):
            assert not np.array_equal(values_of(clean, cell, "dl_throughput_mbps"),
                                      values_of(fault, cell, "dl_throughput_mbps"))
        for cell in topo.member_cells("band", "b2"):
            assert np.array_equal(values_of(clean, cell, "dl_throughput_mbps"),
                                  values_of(fault, cell, "dl_throughput_mbps"))

    def test_linear_drift_ramp_and_cap(self):
        ev = ScenarioEvent(kind="linear_drift", level="cell", element="c1", onset=10,
                           kpi="dl_throughput_mbps", magnitude=8.0, duration=4)
        kw = dict(seed=3, kpis=("dl_throughput_mbps",),
                  baseline={"dl_throughput_mbps": Baseline(mean=100.0)})
        topo = build_topology(TOPOLOGY_6)
        vals = values_of(generate_stream(topo, make_scenario(events=[ev], **kw)), "c1", "dl_throughput_mbps")
        assert vals[10] == 100.0  # ramp starts at zero
        assert vals[11] == 102.0
        assert vals[12] == 104.0
        assert vals[14] == 108.0  # capped at magnitude
        assert vals[40] == 108.0

    def test_magnitude_in_sigma_units(self):
        ev = ScenarioEvent(kind="step_shift", level="cell", element="c1", onset=10,
                           kpi="dl_throughput_mbps", magnitude=None, magnitude_sigmas=-8.0)
        baseline = {"dl_throughput_mbps": Baseline(mean=100.0, noise_sigma=2.0)}
        kw = dict(seed=3, kpis=("dl_throughput_mbps",), baseline=baseline)
        topo = build_topology(TOPOLOGY_6)
        clean = values_of(generate_stream(topo, make_scenario(**kw)), "c1", "dl_throughput_mbps")
        fault = values_of(generate_stream(topo, make_scenario(events=[ev], **kw)), "c1", "dl_throughput_mbps")
        assert np.allclose((fault - clean)[10:], -16.0)

    def test_cadence_per_series(self):
        spec = make_scenario(horizon=20)
        topo = build_topology(spec.topology)
        samples = generate_stream(topo, spec)
        ts = [t for t, _ in series_of(samples, "c3", "call_drop_rate_pct")]
        assert all(b - a == 900 for a, b in zip(ts, ts[1:]))

    def test_percent_kpi_stays_in_domain(self):
        baseline = {"rrc_setup_success_rate_pct": Baseline(mean=99.5, noise_sigma=2.0)}
        spec = make_scenario(seed=11, kpis=("rrc_setup_success_rate_pct",), baseline=baseline)
        topo = build_topology(spec.topology)
        vals = [s.value for s in generate_stream(topo, spec)]
        assert max(vals) <= 100.0 and min(vals) >= 0.0

    def test_event_unknown_element_rejected(self):
        ev = ScenarioEvent(kind="step_shift", level="cell", element="ghost", onset=1,
                           kpi="dl_throughput_mbps", magnitude=1.0)
        spec = make_scenario(events=[ev])
        topo = build_topology(spec.topology)
        with pytest.raises(ValidationError, match="ghost"):
            generate_stream(topo, spec)


class TestApplyConfigEffect:
    def _run_with_config_event(self, seed=21):
        ev = ScenarioEvent(
            kind="config_change", level="cell", element="c1", onset=40,
            payload={"parameter": "tx_power_dbm", "value": 43.0,
                     "kpi_effects": {"dl_throughput_mbps": -30.0}},
        )
        baseline = {"dl_throughput_mbps": Baseline(mean=150.0, noise_sigma=2.0)}
        spec = make_scenario(seed=seed, events=[ev], kpis=("dl_throughput_mbps",), baseline=baseline)
        topo = build_topology(spec.topology)
        return topo, spec, SimulationRun(topo, spec)

    def test_revert_restores_pre_event_mean(self):
        topo, spec, run = self._run_with_config_event()
        run.advance(80)
        # revert to the default value that the scenario event overwrote
        run.apply_config("c1", "tx_power_dbm", topo.default_config["tx_power_dbm"])
        post = run.advance(16)

        clean = generate_stream(topo, make_scenario(seed=21, kpis=spec.kpis, baseline=spec.baseline,
                                                    horizon=96))
        post_vals = values_of(post, "c1", "dl_throughput_mbps")
        clean_tail = values_of(clean, "c1", "dl_throughput_mbps")[80:]
        assert np.array_equal(post_vals, clean_tail)  # exact cancellation
        assert abs(post_vals.mean() - 150.0) <= 2.0  # within one sigma of pre-event mean

    def test_identity_change_leaves_stream_unchanged(self):
        topo, spec, run = self._run_with_config_event(seed=22)
        run.advance(10)
        before_version = run.configs["c2"].config_version
        run.apply_config("c2", "tx_power_dbm", run.configs["c2"].tx_power_dbm)
        assert run.configs["c2"].config_version == before_version
        rest = run.advance(86)
        full = generate_stream(topo, spec)
        assert values_of(rest, "c2", "dl_throughput_mbps").tolist() == \
            values_of(full, "c2", "dl_throughput_mbps")[10:].tolist()

    def test_out_of_bounds_rejected_state_unchanged(self):
        topo, spec, run = self._run_with_config_event(seed=23)
        run.advance(5)
        cfg_before = run.configs["c1"]
        with pytest.raises(ValidationError, match="tx_power_dbm"):
            run.apply_config("c1", "tx_power_dbm", 99.0)
        assert run.configs["c1"] == cfg_before

    def test_unknown_cell_rejected(self):
        topo, spec, run = self._run_with_config_event(seed=24)
        with pytest.raises(NotFoundError):
            run.apply_config("cX", "tx_power_dbm", 30.0)

    def test_scripted_action_effect_and_rollback(self):
        rule = ConfigEffectRule(element="c1", parameter="electrical_tilt_deg",
                                kpi_effects={"dl_throughput_mbps": -45.0})
        baseline = {"dl_throughput_mbps": Baseline(mean=150.0, noise_sigma=2.0)}
        spec = make_scenario(seed=31, kpis=("dl_throughput_mbps",), baseline=baseline,
                             config_effects=[rule])
        topo = build_topology(spec.topology)
        run = SimulationRun(topo, spec)
        run.advance(40)
        old_tilt = run.configs["c1"].electrical_tilt_deg
        run.apply_config("c1", "electrical_tilt_deg", old_tilt + 2.0)
        worsened = run.advance(8)
        assert values_of(worsened, "c1", "dl_throughput_mbps").mean() < 120
        run.apply_config("c1", "electrical_tilt_deg", old_tilt)  # revert cancels effect
        recovered = run.advance(8)
        assert abs(values_of(recovered, "c1", "dl_throughput_mbps").mean() - 150.0) <= 2.0


class TestFmAlarms:
    def test_no_alarm_events_empty(self):
        assert emit_fm_alarms(make_scenario()) == []

    def test_alarm_timestamp_mapping(self):
        ev = ScenarioEvent(kind="fm_alarm", level="node", element="n1", onset=50,
                           payload={"code": "LINK_DOWN", "severity": "critical"})
        alarms = emit_fm_alarms(make_scenario(events=[ev]))
        assert len(alarms) == 1
        assert alarms[0].element_id == "n1"
        assert alarms[0].timestamp == 45000
        assert alarms[0].code == "LINK_DOWN"

    def test_two_alarms_same_element_ordered(self):
        evs = [
            ScenarioEvent(kind="fm_alarm", level="node", element="n1", onset=60,
                          payload={"code": "B", "severity": "major"}),
            ScenarioEvent(kind="fm_alarm", level="node", element="n1", onset=10,
                          payload={"code": "A", "severity": "minor"}),
        ]
        alarms = emit_fm_alarms(make_scenario(events=evs))
        assert [a.timestamp for a in alarms] == [9000, 54000]


class TestSampleWireFormat:
    def test_round_trip_and_decimal_format(self):
        spec = make_scenario(seed=2, horizon=4, kpis=("dl_throughput_mbps",),
                             baseline={"dl_throughput_mbps": Baseline(mean=100.0, noise_sigma=1.0)})
        topo = build_topology(spec.topology)
        samples = generate_stream(topo, spec)
        text = export_samples(samples)
        line = text.splitlines()[0]
        assert len(line.split(",")) == 5
        assert len(line.split(",")[-1].split(".")[1]) == 6
        parsed = parse_samples(text)
        assert [(s.element_id, s.kpi, s.timestamp) for s in parsed] == \
            [(s.element_id, s.kpi, s.timestamp) for s in samples]
        assert all(abs(a.value - b.value) < 1e-6 for a, b in zip(parsed, samples))
