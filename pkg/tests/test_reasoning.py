import httpx
import pytest

from ranloop.datastore import OptimizationRecord
from ranloop.errors import BackendError, BackendParseError, BackendTimeoutError
from ranloop.reasoning import (
    BackendConfig,
    EvidenceBundle,
    ExternalBackend,
    FollowUpQuery,
    Hypothesis,
    ReasoningPass,
    ReasoningTrace,
    reason_initial,
    reflect,
    refine_queries,
    retrieve_doc_passages,
    validate_backend_output,
)
from ranloop.simulator import CmChange, FmAlarm, build_topology
from ranloop.tsa import DeviationRow, DeviationTable

# Topology chosen so band b1 = {c1, c4, c5} avoids c1's node siblings {c2, c3}:
# every pairwise rule conflict (including R3 vs R4) is constructible.
TT_TOPO = {
    "clusters": ["cl1"],
    "regions": [{"id": "r1", "cluster": "cl1"}],
    "bands": ["b1", "b2"],
    "sectors": ["s1", "s2", "s3"],
    "nodes": [{"id": "n1", "region": "r1"}, {"id": "n2", "region": "r1"}],
    "cells": [
        {"id": "c1", "node": "n1", "band": "b1", "sector": "s1"},
        {"id": "c2", "node": "n1", "band": "b2", "sector": "s2"},
        {"id": "c3", "node": "n1", "band": "b2", "sector": "s3"},
        {"id": "c4", "node": "n2", "band": "b1", "sector": "s1"},
        {"id": "c5", "node": "n2", "band": "b1", "sector": "s2"},
        {"id": "c6", "node": "n2", "band": "b2", "sector": "s3"},
    ],
}

KPI = "dl_throughput_mbps"
ONSET = 90000  # interval 100 at 900 s
WINDOW = (0, 180000)


@pytest.fixture
def topo():
    return build_topology(TT_TOPO)


def cp_row(element, level="cell", kpi=KPI, ts=ONSET, direction="down"):
    return DeviationRow(level=level, element_id=element, kpi=kpi, kind="change_point",
                        timestamp=ts, score=10.0, severity=50.0, magnitude=-30.0,
                        direction=direction)


def make_bundle(topo, rows=(), alarms=(), cms=(), precedents=(), cm_coverage=(),
                peer_coverage=()):
    table = DeviationTable(window=WINDOW)
    table.rows = list(rows)
    return EvidenceBundle(
        window=WINDOW,
        deviation_table=table,
        topology=topo,
        alarms=list(alarms),
        recent_config_changes=list(cms),
        precedents=list(precedents),
        cm_coverage=list(cm_coverage),
        peer_coverage=list(peer_coverage),
    )


def alarm_on(element="n1", level="node", ts=ONSET + 900):
    return FmAlarm(element_id=element, level=level, timestamp=ts, code="LINK_DOWN",
                   severity="critical")


def cm_on(element="c1", ts=ONSET - 4 * 900):
    return CmChange(element_id=element, parameter="tx_power_dbm", timestamp=ts,
                    old_value=35.0, new_value=43.0, source="scenario")


class TestReasonInitial:
    def test_empty_table_no_finding_marker(self, topo):
        res = reason_initial(make_bundle(topo))
        assert res.no_finding and res.hypotheses == [] and res.queries == []

    def test_r1_hardware_fault_scoped_to_node(self, topo):
        res = reason_initial(make_bundle(topo, rows=[cp_row("c1")], alarms=[alarm_on()]))
        top = res.hypotheses[0]
        assert top.cause_kind == "hardware_fault"
        assert (top.level, top.element_id) == ("node", "n1")
        assert top.confidence == 0.9

    def test_r3_band_interference_scoped_to_band(self, topo):
        rows = [cp_row("b1", level="band"), cp_row("c1"), cp_row("c4"), cp_row("c5")]
        res = reason_initial(make_bundle(topo, rows=rows))
        top = res.hypotheses[0]
        assert top.cause_kind == "band_level_interference"
        assert (top.level, top.element_id) == ("band", "b1")
        assert top.confidence == 0.8

    def test_hypotheses_sorted_by_confidence(self, topo):
        rows = [cp_row("c1"), cp_row("c6", ts=ONSET + 9000)]
        res = reason_initial(make_bundle(topo, rows=rows, alarms=[alarm_on()]))
        confs = [h.confidence for h in res.hypotheses]
        assert confs == sorted(confs, reverse=True)

    def test_evidence_refs_resolve(self, topo):
        bundle = make_bundle(topo, rows=[cp_row("c1")], cms=[cm_on()])
        res = reason_initial(bundle)
        for h in res.hypotheses:
            h.validate(bundle)

    def test_r2_action_references_actual_cm_change(self, topo):
        change = cm_on()
        res = reason_initial(make_bundle(topo, rows=[cp_row("c1")], cms=[change]))
        top = res.hypotheses[0]
        assert top.cause_kind == "config_regression"
        action = top.proposed_action
        assert action.kind == "revert_config_change"
        assert action.cm_ref == (change.element_id, change.parameter, change.timestamp)
        assert action.to_value == change.old_value


RULE_EXPECTATIONS = {
    # (alarm, cm, band_covered, siblings_clean) -> expected cause kind
    (True, True, True, True): "hardware_fault",
    (True, True, True, False): "hardware_fault",
    (True, True, False, True): "hardware_fault",
    (True, True, False, False): "hardware_fault",
    (True, False, True, True): "hardware_fault",
    (True, False, True, False): "hardware_fault",
    (True, False, False, True): "hardware_fault",
    (True, False, False, False): "hardware_fault",
    (False, True, True, True): "config_regression",
    (False, True, True, False): "config_regression",
    (False, True, False, True): "config_regression",
    (False, True, False, False): "config_regression",
    (False, False, True, True): "band_level_interference",
    (False, False, True, False): "band_level_interference",
    (False, False, False, True): "cell_local_degradation",
    (False, False, False, False): "unknown",
}


class TestRuleTruthTable:
    @pytest.mark.parametrize("combo,expected", sorted(RULE_EXPECTATIONS.items()))
    def test_exhaustive_combinations(self, topo, combo, expected):
        has_alarm, has_cm, band_covered, siblings_clean = combo
        rows = [cp_row("c1")]
        if band_covered:
            rows += [cp_row("c4"), cp_row("c5")]  # rest of band b1, off-node
        if not siblings_clean:
            rows += [cp_row("c2")]  # node sibling on band b2
        alarms = [alarm_on()] if has_alarm else []
        cms = [cm_on()] if has_cm else []
        res = reason_initial(make_bundle(topo, rows=rows, alarms=alarms, cms=cms))
        assert res.hypotheses, f"no hypotheses for combo {combo}"
        got = res.hypotheses[0].cause_kind
        assert got == expected, f"combo {combo}: expected {expected}, got {got}"

    def test_confidence_constants(self, topo):
        expectations = [
            ([cp_row("c1")], [alarm_on()], [], 0.9),
            ([cp_row("c1")], [], [cm_on()], 0.85),
            ([cp_row("c1"), cp_row("c4"), cp_row("c5")], [], [], 0.8),
            ([cp_row("c1")], [], [], 0.7),
        ]
        for rows, alarms, cms, conf in expectations:
            res = reason_initial(make_bundle(topo, rows=rows, alarms=alarms, cms=cms))
            assert res.hypotheses[0].confidence == conf

    def test_unknown_has_no_action_and_emits_queries(self, topo):
        # aggregate-level finding with no cell support matches no rule
        res = reason_initial(make_bundle(topo, rows=[cp_row("r1", level="region")]))
        top = res.hypotheses[0]
        assert top.cause_kind == "unknown"
        assert top.confidence == 0.3
        assert top.proposed_action is None
        assert res.queries

    def test_alarm_outside_two_intervals_does_not_fire_r1(self, topo):
        late = alarm_on(ts=ONSET + 3 * 900)
        res = reason_initial(make_bundle(topo, rows=[cp_row("c1")], alarms=[late]))
        assert res.hypotheses[0].cause_kind != "hardware_fault"

    def test_cm_older_than_eight_intervals_does_not_fire_r2(self, topo):
        old = cm_on(ts=ONSET - 9 * 900)
        res = reason_initial(make_bundle(topo, rows=[cp_row("c1")], cms=[old]))
        assert res.hypotheses[0].cause_kind != "config_regression"

    def test_band_coverage_below_80pct_does_not_fire_r3(self, topo):
        rows = [cp_row("c1"), cp_row("c4")]  # 2 of 3 member cells = 67%
        res = reason_initial(make_bundle(topo, rows=rows))
        kinds = {h.cause_kind for h in res.hypotheses}
        assert "band_level_interference" not in kinds


class TestReflect:
    def test_empty_delta_is_identity(self, topo):
        bundle = make_bundle(topo, rows=[cp_row("c1")])
        prior = reason_initial(bundle).hypotheses
        out = reflect(bundle, prior, None)
        assert out.hypotheses == prior and out.retired == []

    def test_siblings_appearing_merges_to_band_scope(self, topo):
        bundle = make_bundle(topo, rows=[cp_row("c1")])
        prior = reason_initial(bundle).hypotheses
        assert prior[0].cause_kind == "cell_local_degradation"
        delta = make_bundle(topo, rows=[cp_row("c4"), cp_row("c5")])
        out = reflect(bundle, prior, delta)
        assert out.hypotheses[0].cause_kind == "band_level_interference"
        assert out.hypotheses[0].element_id == "b1"
        assert any(p.cause_kind == "cell_local_degradation" for p, _ in out.retired)
        assert all("superseded" in reason for p, reason in out.retired)

    def test_cm_query_showing_no_change_retires_config_regression(self, topo):
        bundle = make_bundle(topo, rows=[cp_row("c1")])
        prior = [
            Hypothesis(
                id="h-config_regression-cell-c1",
                cause_kind="config_regression",
                element_id="c1",
                level="cell",
                confidence=0.6,
                evidence_refs=(f"table:cell/c1/{KPI}/{ONSET}",),
            )
        ]
        delta = make_bundle(topo, cm_coverage=[("c1", 0, WINDOW[1])])
        out = reflect(bundle, prior, delta)
        assert all(h.cause_kind != "config_regression" for h in out.hypotheses)
        assert out.retired and "no change" in out.retired[0][1]

    def test_peer_coverage_confirms_cell_local(self, topo):
        bundle = make_bundle(topo, rows=[cp_row("c1")])
        prior = reason_initial(bundle).hypotheses
        assert prior[0].confidence == 0.7
        delta = make_bundle(topo, peer_coverage=[("n1", KPI)])
        out = reflect(bundle, prior, delta)
        assert out.hypotheses[0].cause_kind == "cell_local_degradation"
        assert out.hypotheses[0].confidence == 0.8
        assert out.hypotheses[0].resolved()

    def test_supporting_evidence_never_decreases_confidence(self, topo):
        bundle = make_bundle(topo, rows=[cp_row("c1")])
        prior = reason_initial(bundle).hypotheses
        delta = make_bundle(topo, alarms=[alarm_on(ts=ONSET)], peer_coverage=[("n1", KPI)])
        out = reflect(bundle, prior, delta)
        by_key = {(h.cause_kind, h.element_id): h.confidence for h in out.hypotheses}
        for p in prior:
            kept = by_key.get((p.cause_kind, p.element_id))
            if kept is not None:
                assert kept >= p.confidence


class TestRefineQueries:
    def test_all_resolved_yields_empty(self, topo):
        hyp = Hypothesis(id="h", cause_kind="hardware_fault", element_id="n1",
                         level="node", confidence=0.9)
        assert refine_queries(ReasoningTrace(), [hyp]) == []

    def test_unresolved_config_regression_queries_cm_history(self, topo):
        hyp = Hypothesis(id="h-config_regression-cell-c1", cause_kind="config_regression",
                         element_id="c1", level="cell", confidence=0.6)
        queries = refine_queries(ReasoningTrace(), [hyp])
        assert len(queries) == 1
        q = queries[0]
        assert q.kind == "cm_history"
        assert q.param("element") == "c1"
        assert q.param("onset_lookaround_intervals") == 96  # +/- 1 day at 900 s

    def test_pure_function_of_trace(self, topo):
        hyp = Hypothesis(id="h-unknown-cell-c1", cause_kind="unknown", element_id="c1",
                         level="cell", confidence=0.3, kpi=KPI)
        trace = ReasoningTrace()
        q1 = refine_queries(trace, [hyp])
        q2 = refine_queries(trace, [hyp])
        assert q1 == q2

    def test_never_repeats_issued_selectors(self, topo):
        hyp = Hypothesis(id="h-unknown-cell-c1", cause_kind="unknown", element_id="c1",
                         level="cell", confidence=0.3, kpi=KPI)
        trace = ReasoningTrace()
        trace.record(ReasoningPass(kind="initial", input_digest="x", hypotheses=[hyp],
                                   queries=[], backend="rule"))
        seen = set()
        for round_no in range(6):
            queries = refine_queries(trace, [hyp])
            assert queries, f"ladder exhausted at round {round_no}"
            for q in queries:
                assert q.selector_key() not in seen, f"repeated selector in round {round_no}"
                seen.add(q.selector_key())
            # runners record executed queries on a refinement pass
            trace.record(ReasoningPass(kind="refinement", input_digest="x",
                                       hypotheses=[hyp], queries=queries, backend="rule"))


class TestValidateBackendOutput:
    def _bundle(self, topo):
        return make_bundle(topo, rows=[cp_row("c1")])

    def test_well_formed_accepted(self, topo):
        raw = """
        {"hypotheses": [{"cause_kind": "cell_local_degradation", "element_id": "c1",
          "level": "cell", "confidence": 0.7,
          "evidence_refs": ["table:cell/c1/dl_throughput_mbps/90000"]}],
         "queries": [{"kind": "cm_history", "params": {"element": "c1"}, "reason": "verify"}]}
        """
        res = validate_backend_output(raw, self._bundle(topo))
        assert res.hypotheses[0].cause_kind == "cell_local_degradation"
        assert res.queries[0].kind == "cm_history"

    def test_confidence_out_of_range(self, topo):
        raw = '{"hypotheses": [{"cause_kind": "unknown", "element_id": "c1", "level": "cell", "confidence": 1.3}]}'
        with pytest.raises(BackendParseError) as exc:
            validate_backend_output(raw, self._bundle(topo))
        assert exc.value.field_path == "hypotheses[0].confidence"

    def test_unknown_cause_kind(self, topo):
        raw = '{"hypotheses": [{"cause_kind": "ghosts", "element_id": "c1", "level": "cell", "confidence": 0.5}]}'
        with pytest.raises(BackendParseError) as exc:
            validate_backend_output(raw, self._bundle(topo))
        assert exc.value.field_path == "hypotheses[0].cause_kind"

    def test_unresolvable_evidence_ref(self, topo):
        raw = ('{"hypotheses": [{"cause_kind": "unknown", "element_id": "c1", "level": "cell",'
               ' "confidence": 0.5, "evidence_refs": ["table:cell/zz/x/1"]}]}')
        with pytest.raises(BackendParseError) as exc:
            validate_backend_output(raw, self._bundle(topo))
        assert "evidence_refs[0]" in exc.value.field_path

    def test_malformed_json(self, topo):
        with pytest.raises(BackendParseError) as exc:
            validate_backend_output("not json at all", self._bundle(topo))
        assert exc.value.field_path == "$"

    def test_unknown_with_action_rejected(self, topo):
        raw = ('{"hypotheses": [{"cause_kind": "unknown", "element_id": "c1", "level": "cell",'
               ' "confidence": 0.3, "proposed_action": {"kind": "open_ticket",'
               ' "element_id": "c1", "level": "cell", "guard_kpi": "dl_throughput_mbps"}}]}')
        with pytest.raises(BackendParseError) as exc:
            validate_backend_output(raw, self._bundle(topo))
        assert "proposed_action" in exc.value.field_path


class TestExternalBackend:
    GOOD = ('{"hypotheses": [{"cause_kind": "cell_local_degradation", "element_id": "c1",'
            ' "level": "cell", "confidence": 0.7}], "queries": []}')

    def _backend(self, handler, retry_limit=2):
        cfg = BackendConfig(endpoint="http://llm.test/v1", model="test-model",
                            retry_limit=retry_limit, timeout_s=5)
        return ExternalBackend(cfg, transport=httpx.MockTransport(handler))

    @staticmethod
    def _chat_response(content):
        return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})

    def test_repair_retry_then_success(self, topo):
        calls = []

        def handler(request):
            calls.append(request)
            if len(calls) == 1:
                return self._chat_response('{"hypotheses": "oops"}')
            return self._chat_response(self.GOOD)

        backend = self._backend(handler)
        res = backend.reason_initial(make_bundle(topo, rows=[cp_row("c1")]))
        assert len(calls) == 2
        assert res.hypotheses[0].cause_kind == "cell_local_degradation"

    def test_persistent_parse_failure_is_typed(self, topo):
        def handler(request):
            return self._chat_response("garbage")

        backend = self._backend(handler, retry_limit=2)
        with pytest.raises(BackendError, match="after 2 retries"):
            backend.reason_initial(make_bundle(topo, rows=[cp_row("c1")]))

    def test_timeout_is_typed(self, topo):
        def handler(request):
            raise httpx.ReadTimeout("slow model")

        backend = self._backend(handler)
        with pytest.raises(BackendTimeoutError):
            backend.reason_initial(make_bundle(topo, rows=[cp_row("c1")]))


class TestDocRetrieval:
    def test_handover_query_ranks_handover_doc_first(self):
        res = retrieve_doc_passages("handover offset")
        assert res.hits[0][0] == "param-handover-offset"
        # hand-scored: that passage contains the standalone token "handover"
        # twice and "offset" twice = 4; the next best doc scores 2
        assert res.hits[0][2] == 4.0
        assert res.hits[1][2] <= 2.0

    def test_k_zero_empty(self):
        assert retrieve_doc_passages("tilt", k=0).hits == []

    def test_all_stopword_query_warns(self):
        res = retrieve_doc_passages("the of and")
        assert res.hits == [] and res.warnings

    def test_deterministic_tie_break_by_doc_id(self):
        corpus = {"b-doc": "alpha beta", "a-doc": "alpha beta"}
        res = retrieve_doc_passages("alpha", corpus=corpus, k=2)
        assert [h[0] for h in res.hits] == ["a-doc", "b-doc"]
