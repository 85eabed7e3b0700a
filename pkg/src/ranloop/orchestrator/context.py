"""Per-run world: scenario simulation, datastore, evidence assembly, and
execution of follow-up queries into evidence deltas."""

from __future__ import annotations

from dataclasses import dataclass, field

from ranloop.datastore import DataStore, OptimizationRecord, ingest_scenario_data
from ranloop.reasoning import EvidenceBundle, FollowUpQuery, retrieve_doc_passages
from ranloop.simulator import (
    NetworkTopology,
    ScenarioSpec,
    SimulationRun,
    build_topology,
)
from ranloop.tsa import (
    ChangePointParams,
    DeviationRow,
    DeviationTable,
    Series,
    TsaParams,
    aggregate_series,
    detect_change_points,
    severity_of,
)
from ranloop.tsa.aggregate import AggregationRule
from ranloop.simulator.kpis import KPI_DEFS, TRAFFIC_WEIGHT_KPI
from ranloop.tsa.deviation import build_deviation_table


@dataclass
class RunContext:
    scenario: ScenarioSpec
    topology: NetworkTopology
    sim: SimulationRun
    store: DataStore
    window: tuple[int, int]
    params: TsaParams = field(default_factory=TsaParams)
    _cm_synced: int = 0

    @classmethod
    def prepare(
        cls,
        scenario: ScenarioSpec,
        window: tuple[int, int] | None = None,
        params: TsaParams | None = None,
        seed_precedents: list[OptimizationRecord] | None = None,
    ) -> "RunContext":
        topology = build_topology(scenario.topology)
        sim = SimulationRun(topology, scenario)
        samples = sim.advance(scenario.horizon)
        store = DataStore(interval_s=scenario.interval_s)
        ingest_scenario_data(store, topology, sim, samples, scenario)
        for rec in seed_precedents or []:
            store.record_optimization(rec)
        ctx = cls(
            scenario=scenario,
            topology=topology,
            sim=sim,
            store=store,
            window=window or (0, scenario.horizon_s),
            params=params or TsaParams(),
        )
        ctx._cm_synced = len(sim.cm_log)
        return ctx

    def sync_cm(self) -> None:
        """Pull CM entries written by the live simulation since the last sync."""
        new = self.sim.cm_log[self._cm_synced :]
        if new:
            self.store.record_cm_changes(list(new))
            self._cm_synced = len(self.sim.cm_log)

    # -- evidence ------------------------------------------------------------

    def assemble_bundle(self) -> EvidenceBundle:
        table = build_deviation_table(self.store, self.topology, self.window, self.params)
        start, end = self.window
        lookback = 8 * self.scenario.interval_s
        bundle = EvidenceBundle(
            window=self.window,
            deviation_table=table,
            topology=self.topology,
            alarms=self.store.alarms_in(start, end),
            recent_config_changes=self.store.cm_changes_in(max(0, start - lookback), end),
            inventory=self.store.im_records(),
            interval_s=self.scenario.interval_s,
        )
        bundle.precedents = self._precedents_for(table)
        bundle.doc_excerpts = self._docs_for(table, bundle)
        return bundle

    def _precedents_for(self, table: DeviationTable, limit: int = 3) -> list:
        elements = []
        for row in table.rows_of_kind("change_point")[:3]:
            cells = self.topology.member_cells(row.level, row.element_id)
            if cells and cells[0] not in elements:
                elements.append(cells[0])
        merged: dict[str, OptimizationRecord] = {}
        for el in elements:
            for kind in ("revert_config_change", "adjust_parameter", "open_ticket"):
                for rec in self.store.query_precedents(el, kind, limit):
                    merged.setdefault(rec.record_id, rec)
        return sorted(merged.values(), key=lambda r: (-r.created_at, r.record_id))

    def _docs_for(self, table: DeviationTable, bundle: EvidenceBundle) -> list[tuple[str, str]]:
        terms = []
        for row in table.rows_of_kind("change_point")[:3]:
            terms.append(row.kpi)
        for cm in bundle.recent_config_changes[:3]:
            terms.append(cm.parameter)
        if not terms:
            return []
        res = retrieve_doc_passages(terms, k=2)
        return [(doc_id, passage) for doc_id, passage, _score in res.hits]

    # -- follow-up execution ---------------------------------------------------

    def execute_query(self, q: FollowUpQuery) -> EvidenceBundle:
        """Run one follow-up query and package the results as an evidence delta."""
        delta = EvidenceBundle(
            window=self.window,
            deviation_table=DeviationTable(window=self.window),
            topology=self.topology,
            interval_s=self.scenario.interval_s,
        )
        if q.kind == "kpi":
            self._execute_kpi_query(q, delta)
        elif q.kind == "cm_history":
            element = q.param("element")
            n = int(q.param("onset_lookaround_intervals", 96))
            start = max(0, self.window[0] - n * self.scenario.interval_s)
            end = self.window[1] + n * self.scenario.interval_s
            target = None if element in (None, "*") else element
            delta.recent_config_changes = self.store.cm_changes_in(start, end, target)
            delta.cm_coverage = [(element or "*", start, end)]
        elif q.kind == "fm_alarms":
            n = int(q.param("lookaround_intervals", 96))
            start = max(0, self.window[0] - n * self.scenario.interval_s)
            end = self.window[1] + n * self.scenario.interval_s
            delta.alarms = self.store.alarms_in(start, end)
        elif q.kind == "precedents":
            element = q.param("element")
            limit = int(q.param("limit", 5))
            merged: dict[str, OptimizationRecord] = {}
            for kind in ("revert_config_change", "adjust_parameter", "open_ticket"):
                for rec in self.store.query_precedents(element, kind, limit):
                    merged.setdefault(rec.record_id, rec)
            delta.precedents = sorted(merged.values(), key=lambda r: (-r.created_at, r.record_id))
        return delta

    def _execute_kpi_query(self, q: FollowUpQuery, delta: EvidenceBundle) -> None:
        kpi = q.param("kpi")
        kpis = tuple(self.scenario.kpis) if kpi in (None, "*") else (kpi,)
        level = q.param("level", "cell")
        element = q.param("element")
        peer_scope = q.param("peer_scope")
        widen = int(q.param("widen_days", 0))
        day_s = 96 * self.scenario.interval_s
        window = (
            max(0, self.window[0] - widen * day_s),
            self.window[1] + widen * day_s,
        )

        if peer_scope == "node" and element in self.topology.cells:
            node = self.topology.cells[element].node
            cells = self.topology.member_cells("node", node)
            for k in kpis:
                delta.peer_coverage.append((node, k))
            rows = self._changepoint_rows(cells, "cell", kpis, window)
        else:
            target_level = level if level in ("cell", "band", "sector", "node", "region", "cluster") else "cell"
            if element in (None, "*"):
                groups = self.topology.elements_at(target_level)
            else:
                groups = [element] if self.topology.exists(target_level, element) else []
                if not groups and element in self.topology.cells:
                    groups = self.topology.children_of("cell", element, target_level)
            rows = self._aggregate_changepoint_rows(groups, target_level, kpis, window)
        table = DeviationTable(window=window)
        table.rows = rows
        delta.deviation_table = table

    def _changepoint_rows(self, cells, level, kpis, window) -> list[DeviationRow]:
        from ranloop.datastore import KpiSelector

        rows: list[DeviationRow] = []
        sel = KpiSelector(level="cell", kpis=tuple(kpis), time_range=window,
                          element_ids=tuple(cells))
        data = self.store.query_kpi(sel)
        for (el, k), pts in sorted(data.items()):
            series = Series.from_points(pts)
            if len(series) < 2 * self.params.changepoint.min_segment:
                continue
            for cp in detect_change_points(series, self.params.changepoint,
                                           element_id=el, level=level, kpi=k):
                rows.append(DeviationRow(
                    level=level, element_id=el, kpi=k, kind="change_point",
                    timestamp=cp.onset, score=cp.score,
                    severity=severity_of("change_point", cp.score, cp.magnitude, cp.sigma),
                    magnitude=cp.magnitude, direction=cp.direction,
                ))
        return rows

    def _aggregate_changepoint_rows(self, groups, level, kpis, window) -> list[DeviationRow]:
        from ranloop.datastore import KpiSelector

        if not groups:
            return []
        if level == "cell":
            return self._changepoint_rows(groups, "cell", kpis, window)
        rows: list[DeviationRow] = []
        member = sorted({c for g in groups for c in self.topology.member_cells(level, g)})
        sel_kpis = tuple(dict.fromkeys(tuple(kpis) + (TRAFFIC_WEIGHT_KPI,)))
        sel = KpiSelector(level="cell", kpis=sel_kpis, time_range=window,
                          element_ids=tuple(member))
        data = self.store.query_kpi(sel)
        weights = {el: Series.from_points(pts) for (el, k), pts in data.items()
                   if k == TRAFFIC_WEIGHT_KPI}
        for k in kpis:
            cell_series = {el: Series.from_points(pts) for (el, kk), pts in data.items()
                           if kk == k and pts}
            if not cell_series:
                continue
            rule = AggregationRule(kpi=k, method=KPI_DEFS[k].aggregation)
            grouped = aggregate_series(cell_series, rule, level, self.topology, weights=weights)
            for g in groups:
                series = grouped.get(g)
                if series is None or len(series) < 2 * self.params.changepoint.min_segment:
                    continue
                for cp in detect_change_points(series, self.params.changepoint,
                                               element_id=g, level=level, kpi=k):
                    rows.append(DeviationRow(
                        level=level, element_id=g, kpi=k, kind="change_point",
                        timestamp=cp.onset, score=cp.score,
                        severity=severity_of("change_point", cp.score, cp.magnitude, cp.sigma),
                        magnitude=cp.magnitude, direction=cp.direction,
                    ))
        return rows
