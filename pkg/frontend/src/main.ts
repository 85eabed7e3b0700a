// Browser wiring: one state container, one event-stream subscription per
// followed run, everything rendered from API payloads.

import { HttpConsoleApi } from "./api.js";
import { ApprovalPanel } from "./approval.js";
import {
  buildHierarchyExplorer,
  chartForSelection,
  HierarchyNode,
} from "./hierarchy.js";
import { renderApprovalPanel, renderChart, renderHierarchy, renderTimeline } from "./render.js";
import { ConsoleStore } from "./state.js";
import { followRun, RunTimeline } from "./timeline.js";
import { DeviationTablePayload, TopologyPayload } from "./types.js";

const api = new HttpConsoleApi("");
const store = new ConsoleStore();

const els = {
  scenario: document.getElementById("scenario") as HTMLSelectElement,
  hierarchy: document.getElementById("hierarchy")!,
  chart: document.getElementById("chart")!,
  runs: document.getElementById("runs")!,
  timeline: document.getElementById("timeline")!,
  approval: document.getElementById("approval")!,
};

let topology: TopologyPayload | null = null;
let table: DeviationTablePayload | null = null;
let timeline: RunTimeline | null = null;
let panel: ApprovalPanel | null = null;

async function loadScenario(name: string): Promise<void> {
  topology = await api.getTopology(name);
  table = await api.getDeviations(name);
  renderHierarchy(els.hierarchy, buildHierarchyExplorer(topology, table), onSelectElement);
}

async function onSelectElement(node: HierarchyNode): Promise<void> {
  if (!table) return;
  const scenario = els.scenario.value;
  const kpi = store.get().activeKpis[0];
  const level = node.level === "cell" ? "cell" : node.level;
  const series = await api.getKpi({
    scenario,
    level,
    elements: [node.elementId],
    kpis: [kpi],
  });
  renderChart(els.chart, chartForSelection(series, table, node.elementId, kpi));
}

async function refreshRuns(): Promise<void> {
  const runs = await api.listRuns();
  els.runs.replaceChildren();
  for (const run of runs) {
    const btn = document.createElement("button");
    btn.textContent = `${run.run_id} [${run.mode}] ${run.status}`;
    btn.addEventListener("click", () => followRunById(run.run_id));
    els.runs.appendChild(btn);
  }
}

async function followRunById(runId: string): Promise<void> {
  store.selectRun(runId);
  timeline = new RunTimeline(runId);
  const tl = timeline;
  void followRun(
    tl,
    (fromSeq, onEvent) =>
      api.streamEvents(runId, fromSeq, (e) => {
        onEvent(e);
        store.noteEventSeen(runId, e.seq);
        if (e.kind === "approval_requested") void raiseApprovalPanel();
        if (panel) renderApprovalPanel(els.approval, panel.onEvent(e), onDecision);
      }),
    { onUpdate: () => renderTimeline(els.timeline, tl) },
  ).then(() => renderTimeline(els.timeline, tl));
  renderTimeline(els.timeline, tl);
}

async function raiseApprovalPanel(): Promise<void> {
  const pending = await api.listApprovals();
  const runId = store.get().selectedRunId;
  const mine = pending.find((p) => p.run_id === runId);
  if (!mine) return;
  panel = new ApprovalPanel(api, mine);
  renderApprovalPanel(els.approval, panel.view(), onDecision);
}

function onDecision(decision: "approve" | "reject", note: string): void {
  if (!panel) return;
  void panel.decide(decision, note).then((view) => {
    renderApprovalPanel(els.approval, view, onDecision);
  });
}

async function boot(): Promise<void> {
  const { scenarios } = await (await fetch("/scenarios")).json();
  els.scenario.replaceChildren();
  for (const name of scenarios) {
    const opt = document.createElement("option");
    opt.value = opt.textContent = name;
    els.scenario.appendChild(opt);
  }
  els.scenario.addEventListener("change", () => void loadScenario(els.scenario.value));
  if (scenarios.length) await loadScenario(scenarios[0]);
  await refreshRuns();
  setInterval(() => void refreshRuns(), 3000);
}

void boot();
