import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ranloop.datastore import DataStore, ingest_scenario_data
from ranloop.errors import ValidationError
from ranloop.simulator import ScenarioEvent, SimulationRun, build_topology
from ranloop.tsa import (
    AggregationRule,
    Series,
    TsaParams,
    aggregate_series,
    build_deviation_table,
)

from conftest import TOPOLOGY_6, make_scenario
from oracles import weighted_mean


def mk(values, start=0):
    values = np.asarray(values, dtype=float)
    return Series(np.arange(start, start + len(values)) * 900, values)


def flat_weights(cells, value, n):
    return {c: mk(np.full(n, float(value))) for c in cells}


class TestAggregateSeries:
    def test_equal_weights_mean(self, topology6):
        series = {"c1": mk([10.0]), "c2": mk([20.0])}
        rule = AggregationRule(kpi="dl_throughput_mbps", method="traffic_weighted_mean")
        out = aggregate_series(series, rule, "node", topology6,
                              weights=flat_weights(["c1", "c2"], 1.0, 1))
        assert out["n1"].values[0] == pytest.approx(15.0)

    def test_sum_rule(self, topology6):
        series = {"c1": mk([10.0]), "c2": mk([20.0])}
        rule = AggregationRule(kpi="dl_throughput_mbps", method="sum")
        out = aggregate_series(series, rule, "node", topology6)
        assert out["n1"].values[0] == pytest.approx(30.0)

    def test_weighted_mean_1_3(self, topology6):
        # oracle: hand computation (10*1 + 20*3)/4 = 17.5, cross-checked by brute force
        series = {"c1": mk([10.0]), "c2": mk([20.0])}
        weights = {"c1": mk([1.0]), "c2": mk([3.0])}
        rule = AggregationRule(kpi="dl_throughput_mbps", method="traffic_weighted_mean")
        out = aggregate_series(series, rule, "node", topology6, weights=weights)
        assert out["n1"].values[0] == pytest.approx(17.5)
        assert out["n1"].values[0] == pytest.approx(weighted_mean([10.0, 20.0], [1.0, 3.0]))

    def test_missing_sample_excluded_from_that_timestamp(self, topology6):
        series = {"c1": mk([10.0, 12.0]), "c2": mk([20.0])}  # c2 missing t=900
        rule = AggregationRule(kpi="dl_throughput_mbps", method="arithmetic_mean")
        out = aggregate_series(series, rule, "node", topology6)
        assert out["n1"].values.tolist() == [15.0, 12.0]

    def test_zero_total_weight_falls_back_to_mean(self, topology6):
        series = {"c1": mk([10.0]), "c2": mk([20.0])}
        rule = AggregationRule(kpi="dl_throughput_mbps", method="traffic_weighted_mean")
        out = aggregate_series(series, rule, "node", topology6,
                               weights=flat_weights(["c1", "c2"], 0.0, 1))
        assert out["n1"].values[0] == pytest.approx(15.0)

    def test_empty_group_error(self, topology6):
        rule = AggregationRule(kpi="dl_throughput_mbps", method="sum")
        with pytest.raises(ValidationError, match="no groups"):
            aggregate_series({}, rule, "node", topology6)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValidationError, match="method"):
            AggregationRule(kpi="dl_throughput_mbps", method="mode")

    @settings(max_examples=30, deadline=None)
    @given(
        vals=st.lists(st.floats(min_value=0, max_value=1000), min_size=6, max_size=6),
    )
    def test_sum_linearity_over_disjoint_groups(self, vals):
        topo = build_topology(TOPOLOGY_6)
        series = {f"c{i+1}": mk([v]) for i, v in enumerate(vals)}
        rule = AggregationRule(kpi="dl_throughput_mbps", method="sum")
        per_node = aggregate_series(series, rule, "node", topo)
        per_cluster = aggregate_series(series, rule, "cluster", topo)
        assert per_cluster["cl1"].values[0] == pytest.approx(
            per_node["n1"].values[0] + per_node["n2"].values[0]
        )


def build_store(events=(), seed=101, horizon=672, config_effects=()):
    spec = make_scenario(seed=seed, horizon=horizon, events=list(events),
                         config_effects=list(config_effects))
    topo = build_topology(spec.topology)
    run = SimulationRun(topo, spec)
    samples = run.advance(spec.horizon)
    store = DataStore()
    ingest_scenario_data(store, topo, run, samples, spec)
    return store, topo, spec, run


class TestDeviationTable:
    def test_event_free_scenario_clean(self):
        store, topo, spec, _ = build_store(seed=101)
        table = build_deviation_table(store, topo, (0, spec.horizon_s))
        assert len(table.rows_of_kind("change_point")) == 0
        assert len(table.rows_of_kind("anomaly")) <= 5  # false-alarm budget
        assert len(table.rows_of_kind("peer_outlier")) <= 2

    def test_band_fault_ranked_above_cells(self):
        ev = ScenarioEvent(kind="step_shift", level="band", element="b1", onset=300,
                           kpi="dl_throughput_mbps", magnitude=-30.0)
        store, topo, spec, _ = build_store(events=[ev], seed=102)
        table = build_deviation_table(store, topo, (0, spec.horizon_s))
        top = table.rows[0]
        assert (top.kind, top.level, top.element_id) == ("change_point", "band", "b1")
        band_cp_rank = top.rank
        cell_cp_ranks = [r.rank for r in table.rows
                         if r.kind == "change_point" and r.level == "cell"]
        assert cell_cp_ranks and all(band_cp_rank < r for r in cell_cp_ranks)
        assert table.summary["band"]["change_point"] == 1

    def test_empty_window_empty_table(self):
        store, topo, spec, _ = build_store(seed=103, horizon=96)
        table = build_deviation_table(store, topo, (spec.horizon_s, spec.horizon_s))
        assert table.rows == [] and table.summary == {}

    def test_deterministic_for_fixed_inputs(self):
        ev = ScenarioEvent(kind="step_shift", level="cell", element="c2", onset=200,
                           kpi="ho_success_rate_pct", magnitude=-4.0)
        store, topo, spec, _ = build_store(events=[ev], seed=104, horizon=288)
        t1 = build_deviation_table(store, topo, (0, spec.horizon_s))
        t2 = build_deviation_table(store, topo, (0, spec.horizon_s))
        assert t1.to_canonical_json() == t2.to_canonical_json()

    def test_rows_sorted_by_rank_and_severity(self):
        ev = ScenarioEvent(kind="step_shift", level="cell", element="c1", onset=300,
                           kpi="dl_throughput_mbps", magnitude=-40.0)
        store, topo, spec, _ = build_store(events=[ev], seed=105)
        table = build_deviation_table(store, topo, (0, spec.horizon_s))
        ranks = [r.rank for r in table.rows]
        assert ranks == list(range(1, len(ranks) + 1))
        sevs = [r.severity for r in table.rows]
        assert sevs == sorted(sevs, reverse=True)

    def test_text_and_payload_exports(self):
        ev = ScenarioEvent(kind="step_shift", level="cell", element="c1", onset=300,
                           kpi="dl_throughput_mbps", magnitude=-40.0)
        store, topo, spec, _ = build_store(events=[ev], seed=106)
        table = build_deviation_table(store, topo, (0, spec.horizon_s))
        text = table.to_text()
        assert text.splitlines()[0].startswith("rank")
        assert "change_point" in text
        payload = table.to_payload()
        assert payload["window"] == {"start": 0, "end": spec.horizon_s}
        assert payload["rows"][0]["rank"] == 1
