"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with the measured numbers. Tolerances are pinned here.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion lines.
"""

import time

import numpy as np
import pytest

from ranloop import scenarios
from ranloop.orchestrator import (
    Intent,
    RunLimits,
    RunSpec,
    Runtime,
    export_trace,
    replay_trace,
)
from ranloop.reasoning import reason_initial
from ranloop.simulator import SimulationRun, build_topology
from ranloop.tsa import ChangePointParams, Series, detect_change_points, robust_z_scores

from oracles import best_single_split, rolling_robust_z
from test_reasoning import RULE_EXPECTATIONS, TT_TOPO, alarm_on, cm_on, cp_row, make_bundle


def criterion(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def run_mode(rt, spec, mode, approval="auto_approve", limits=None):
    rid = rt.create_run(
        RunSpec(
            intent=Intent(goal_kind="investigate_degradation", window=(0, spec.horizon_s)),
            mode=mode,
            scenario=spec,
            approval_mode=approval,
            limits=limits or RunLimits(),
        ),
        background=False,
    )
    return rt.get_run(rid), rt.get_handle(rid)


class TestAcceptance:
    def test_01_detection_accuracy(self):
        """100 seeded scenarios (20 cells, 5 KPIs, 672 intervals, one step
        >= 5 sigma): element/KPI found with onset within +/-2 in >= 95 cases;
        <= 2 false change points across all event-free controls; < 60 s."""
        t0 = time.time()
        hits = 0
        false_cps = 0
        for seed in range(100):
            spec, truth = scenarios.detection_case(seed)
            topo = build_topology(spec.topology)
            ts, series = SimulationRun(topo, spec).advance_arrays(spec.horizon)
            for (cell, kpi), vals in series.items():
                cps = detect_change_points(Series(ts, vals), element_id=cell, kpi=kpi)
                if cell == truth["cell"] and kpi == truth["kpi"]:
                    if any(abs(cp.onset // 900 - truth["onset"]) <= 2 for cp in cps):
                        hits += 1
            control = scenarios.event_free(seed)
            ts, series = SimulationRun(topo, control).advance_arrays(control.horizon)
            for vals in series.values():
                false_cps += len(detect_change_points(Series(ts, vals)))
        elapsed = time.time() - t0
        ok = hits >= 95 and false_cps <= 2 and elapsed < 60
        criterion(
            "detection accuracy",
            ok,
            f"hits {hits}/100 (need >=95), false change points {false_cps} (need <=2), "
            f"{elapsed:.1f}s (need <60s)",
        )

    def test_02_hierarchical_localization(self):
        """50 seeded band-fault scenarios: agentic rule-backend runs attribute
        the correct band in >= 45 cases and never an unrelated band."""
        rt = Runtime()
        correct = 0
        unrelated = 0
        for i in range(50):
            band = "b1" if i % 2 == 0 else "b2"
            spec = scenarios.band_fault(1500 + i, band=band, horizon=192)
            state, _ = run_mode(rt, spec, "agentic")
            hyps = (state.report or {}).get("hypotheses", [])
            band_hyps = [h for h in hyps if h["cause_kind"] == "band_level_interference"]
            if band_hyps and band_hyps[0]["element_id"] == band:
                correct += 1
            unrelated += sum(1 for h in band_hyps if h["element_id"] != band)
        ok = correct >= 45 and unrelated == 0
        criterion(
            "hierarchical localization",
            ok,
            f"correct band {correct}/50 (need >=45), unrelated-band attributions "
            f"{unrelated} (need 0)",
        )

    def test_03_rule_oracle_conformance(self, topo=None):
        """Exhaustive evidence combinations for R1-R5 (incl. all pairwise
        precedence conflicts) match the declared truth table with 0 deviations."""
        topo = build_topology(TT_TOPO)
        deviations = []
        for combo, expected in sorted(RULE_EXPECTATIONS.items()):
            has_alarm, has_cm, band_covered, siblings_clean = combo
            rows = [cp_row("c1")]
            if band_covered:
                rows += [cp_row("c4"), cp_row("c5")]
            if not siblings_clean:
                rows += [cp_row("c2")]
            bundle = make_bundle(
                topo,
                rows=rows,
                alarms=[alarm_on()] if has_alarm else [],
                cms=[cm_on()] if has_cm else [],
            )
            res = reason_initial(bundle)
            got = res.hypotheses[0].cause_kind if res.hypotheses else None
            if got != expected:
                deviations.append((combo, expected, got))
        expected_conf = {"hardware_fault": 0.9, "config_regression": 0.85,
                         "band_level_interference": 0.8, "cell_local_degradation": 0.7,
                         "unknown": 0.3}
        for combo, expected in sorted(RULE_EXPECTATIONS.items()):
            has_alarm, has_cm, band_covered, siblings_clean = combo
            rows = [cp_row("c1")]
            if band_covered:
                rows += [cp_row("c4"), cp_row("c5")]
            if not siblings_clean:
                rows += [cp_row("c2")]
            bundle = make_bundle(topo, rows=rows,
                                 alarms=[alarm_on()] if has_alarm else [],
                                 cms=[cm_on()] if has_cm else [])
            res = reason_initial(bundle)
            if res.hypotheses and res.hypotheses[0].confidence != expected_conf[expected]:
                deviations.append((combo, f"conf {expected_conf[expected]}",
                                   res.hypotheses[0].confidence))
        ok = not deviations
        criterion(
            "rule-oracle conformance",
            ok,
            f"16 evidence combinations (all pairwise conflicts), deviations: "
            f"{deviations or 0}",
        )

    def test_04_rollback_round_trip(self):
        """Worsening action -> rolled_back with field-for-field config
        round-trip; improving action -> confirmed with positive kpi_delta."""
        rt = Runtime()
        state, handle = run_mode(rt, scenarios.adversarial_action(2001), "agentic")
        roll_ok = state.status == "rolled_back"
        pre_snap = handle.ctx.store.get_snapshot(state.validation.pre_snapshot_id)
        roundtrip_ok = all(
            handle.ctx.sim.configs[cid].values() == cfg.values()
            for cid, cfg in pre_snap.entries.items()
        )

        state2, handle2 = run_mode(rt, scenarios.improving_action(2002), "agentic")
        confirm_ok = state2.status == "confirmed"
        rec = next(
            (r for r in handle2.ctx.store.optimization_records()
             if r.record_id == state2.validation.record_id),
            None,
        )
        delta_ok = rec is not None and rec.outcome == "confirmed" and \
            rec.kpi_delta.get("dl_throughput_mbps", 0) > 0
        ok = roll_ok and roundtrip_ok and confirm_ok and delta_ok
        criterion(
            "rollback round-trip",
            ok,
            f"worsening: status={state.status} config-roundtrip={roundtrip_ok}; "
            f"improving: status={state2.status} positive-delta={delta_ok}",
        )

    def test_05_mode_consistency(self):
        """10-scenario single-cause suite: workflow, agent, and agentic modes
        yield the identical top-hypothesis cause kind (10/10)."""
        rt = Runtime()
        agree = 0
        mismatches = []
        for spec, expected in scenarios.single_cause_suite():
            tops = []
            for mode in ("workflow", "agent", "agentic"):
                state, _ = run_mode(rt, spec, mode, approval="auto_reject")
                tops.append((state.report or {}).get("top_cause_kind"))
            if tops[0] == tops[1] == tops[2] == expected:
                agree += 1
            else:
                mismatches.append((spec.name, expected, tops))
        ok = agree == 10
        criterion(
            "mode consistency",
            ok,
            f"agreement {agree}/10 (need 10/10){'; mismatches: ' + str(mismatches) if mismatches else ''}",
        )

    def test_06_determinism_and_replay(self):
        """Same seed, rule backend -> byte-identical exported traces; replay
        reproduces the terminal status."""
        traces = []
        for _ in range(2):
            rt = Runtime()
            spec = scenarios.adversarial_action(2101)
            _, handle = run_mode(rt, spec, "agentic")
            traces.append(export_trace(handle))
        identical = traces[0] == traces[1]
        replay = replay_trace(traces[0])
        replay_ok = replay["status_match"] and replay["trace_match"]
        ok = identical and replay_ok
        criterion(
            "determinism/replay",
            ok,
            f"byte-identical={identical}, replay status {replay['original_status']}=="
            f"{replay['replayed_status']} match={replay_ok}",
        )

    def test_07_statistical_oracle_equivalence(self):
        """1,000 random short series (length <= 64): anomaly flags equal the
        brute-force rolling median/MAD recomputation; change-point onsets agree
        with the brute-force single-split estimator within +/-2 for every
        injected step >= 5 sigma."""
        rng = np.random.default_rng(777)
        anomaly_mismatches = 0
        cp_misses = 0
        steps = 0
        for _ in range(1000):
            n = int(rng.integers(16, 65))
            v = rng.normal(0, 1, n)
            kind = rng.random()
            injected_step = False
            if kind < 0.4 and n >= 24:
                onset = int(rng.integers(8, n - 8))
                v[onset:] += float(rng.choice([-1, 1])) * float(rng.uniform(5, 12))
                injected_step = True
                steps += 1
            elif kind < 0.7:
                v[int(rng.integers(12, n))] += float(rng.choice([-1, 1])) * 25.0

            z = robust_z_scores(v, 12)
            oracle_z = rolling_robust_z(list(v), 12)
            for idx, zo in oracle_z.items():
                flag_impl = abs(z[idx - 12]) >= 5.0
                flag_oracle = abs(zo) >= 5.0
                if flag_impl != flag_oracle or abs(z[idx - 12] - zo) > 1e-9:
                    anomaly_mismatches += 1

            if injected_step:
                series = Series(np.arange(n) * 900, v)
                cps = detect_change_points(series, ChangePointParams(remove_diurnal=False))
                split = best_single_split(list(v))
                if not any(abs(cp.onset // 900 - split) <= 2 for cp in cps):
                    cp_misses += 1
        ok = anomaly_mismatches == 0 and cp_misses == 0
        criterion(
            "statistical oracle equivalence",
            ok,
            f"anomaly mismatches {anomaly_mismatches} (need 0); change-point "
            f"disagreements {cp_misses}/{steps} steps (need 0)",
        )

    def test_08_event_stream_integrity(self):
        """Completed runs stream a gapless in-order sequence from 1 whose
        length equals the exported trace's event count."""
        rt = Runtime()
        problems = []
        for spec, mode in (
            (scenarios.cm_regression(2201), "agentic"),
            (scenarios.cell_degradation(2202), "agent"),
            (scenarios.event_free(2203, horizon=192, topology=scenarios.topology_6()),
             "workflow"),
        ):
            state, handle = run_mode(rt, spec, mode)
            streamed = list(handle.events.stream(1))
            seqs = [e.seq for e in streamed]
            trace_events = sum(
                1 for line in export_trace(handle).splitlines()
                if '"entry":"event"' in line
            )
            if seqs != list(range(1, len(seqs) + 1)):
                problems.append(f"{spec.name}: gaps in {seqs}")
            if len(seqs) != trace_events:
                problems.append(f"{spec.name}: {len(seqs)} streamed != {trace_events} in trace")
        ok = not problems
        criterion(
            "event-stream integrity",
            ok,
            f"3 runs checked; problems: {problems or 'none'}",
        )
