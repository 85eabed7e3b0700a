// Minimal DOM rendering: hierarchy tree with badges, an inline SVG chart,
// the run timeline, and the approval panel. No framework, no virtual DOM;
// each render replaces the container's content.

import { badgeTotal, ChartSeries, HierarchyExplorer, HierarchyNode } from "./hierarchy.js";
import { RunTimeline } from "./timeline.js";
import { PanelView } from "./approval.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderHierarchy(
  container: HTMLElement,
  explorer: HierarchyExplorer,
  onSelect: (node: HierarchyNode) => void,
): void {
  container.replaceChildren();
  const renderNode = (node: HierarchyNode, depth: number): HTMLElement => {
    const wrap = el("div", "tree-node");
    wrap.style.marginLeft = `${depth * 14}px`;
    const row = el("div", "tree-row");
    const label = el("span", "tree-label", `${node.level}:${node.elementId}`);
    row.appendChild(label);
    const total = badgeTotal(node.badge);
    if (total > 0) {
      const badge = el(
        "span",
        "badge",
        `${node.badge.change_point}/${node.badge.anomaly}/${node.badge.peer_outlier}`,
      );
      badge.title = "change points / anomalies / peer outliers";
      row.appendChild(badge);
    }
    row.addEventListener("click", () => onSelect(node));
    wrap.appendChild(row);
    for (const child of node.children) wrap.appendChild(renderNode(child, depth + 1));
    return wrap;
  };
  for (const cluster of explorer.root) container.appendChild(renderNode(cluster, 0));
  const groupings = el("div", "groupings");
  groupings.appendChild(el("h3", undefined, "bands / sectors"));
  for (const grouped of [...explorer.groupings.bands, ...explorer.groupings.sectors]) {
    groupings.appendChild(renderNode(grouped, 0));
  }
  container.appendChild(groupings);
}

export function renderChart(container: HTMLElement, chart: ChartSeries): void {
  container.replaceChildren();
  container.appendChild(el("h3", undefined, `${chart.elementId} - ${chart.kpi}`));
  if (!chart.points.length) {
    container.appendChild(el("p", "empty", "no points in window"));
    return;
  }
  const w = 640;
  const h = 180;
  const xs = chart.points.map((p) => p[0]);
  const ys = chart.points.map((p) => p[1]);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const sx = (x: number) => ((x - x0) / Math.max(x1 - x0, 1)) * (w - 20) + 10;
  const sy = (y: number) => h - 15 - ((y - y0) / Math.max(y1 - y0, 1e-9)) * (h - 30);
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${w} ${h}`);
  svg.setAttribute("class", "chart");
  const path = document.createElementNS(svg.namespaceURI, "path");
  path.setAttribute(
    "d",
    chart.points.map((p, i) => `${i ? "L" : "M"}${sx(p[0]).toFixed(1)},${sy(p[1]).toFixed(1)}`).join(" "),
  );
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", "#2b6cb0");
  svg.appendChild(path);
  for (const onset of chart.onsetMarkers) {
    const line = document.createElementNS(svg.namespaceURI, "line");
    line.setAttribute("x1", String(sx(onset)));
    line.setAttribute("x2", String(sx(onset)));
    line.setAttribute("y1", "5");
    line.setAttribute("y2", String(h - 10));
    line.setAttribute("stroke", "#c53030");
    line.setAttribute("stroke-dasharray", "4 3");
    svg.appendChild(line);
  }
  container.appendChild(svg);
  container.appendChild(
    el("p", "meta", `${chart.points.length} points, ${chart.onsetMarkers.length} onset markers`),
  );
}

export function renderTimeline(container: HTMLElement, timeline: RunTimeline): void {
  container.replaceChildren();
  const head = el("div", "timeline-head");
  head.appendChild(el("h3", undefined, `run ${timeline.runId}`));
  head.appendChild(el("span", `conn conn-${timeline.connection}`, timeline.connection));
  container.appendChild(head);
  const list = el("ol", "timeline");
  for (const entry of timeline.list()) {
    const item = el("li", `evt evt-${entry.kind}`);
    item.appendChild(el("span", "seq", String(entry.seq)));
    item.appendChild(el("span", "label", entry.label));
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderApprovalPanel(
  container: HTMLElement,
  view: PanelView,
  onDecide: (decision: "approve" | "reject", note: string) => void,
): void {
  container.replaceChildren();
  const a = view.approval;
  container.appendChild(el("h3", undefined, `approval ${a.approval_id} (${a.run_id})`));
  const action = a.action;
  const lines = [
    `action: ${action.kind} on ${action.level}/${action.element_id}`,
    action.parameter
      ? `parameter: ${action.parameter} ${action.from_value} -> ${action.to_value}`
      : "",
    `guard: ${action.guard_kpi} within ${action.guard_threshold_pct}% over ` +
      `${action.evaluation_window} intervals`,
    `hypothesis: ${a.hypothesis.cause_kind} (${a.hypothesis.confidence}) - ` +
      a.hypothesis.rationale,
    `evidence: ${a.hypothesis.evidence_refs.join(", ")}`,
    a.precedents.length ? `precedents: ${a.precedents.join(", ")}` : "precedents: none",
  ].filter(Boolean);
  for (const line of lines) container.appendChild(el("p", "detail", line));

  container.appendChild(el("p", `phase phase-${view.phase}`, `state: ${view.phase}`));
  if (view.kpiDelta) {
    const delta = Object.entries(view.kpiDelta)
      .map(([k, v]) => `${k}: ${v >= 0 ? "+" : ""}${v.toFixed(2)}`)
      .join(", ");
    container.appendChild(el("p", "delta", `observed KPI delta: ${delta}`));
  }
  if (view.conflictMessage) {
    container.appendChild(el("p", "conflict", `decided elsewhere: ${view.conflictMessage}`));
  }

  const note = document.createElement("input");
  note.placeholder = "operator note";
  note.disabled = !view.controlsEnabled;
  const approve = el("button", "approve", "approve") as HTMLButtonElement;
  const reject = el("button", "reject", "reject") as HTMLButtonElement;
  approve.disabled = reject.disabled = !view.controlsEnabled;
  approve.addEventListener("click", () => onDecide("approve", note.value));
  reject.addEventListener("click", () => onDecide("reject", note.value));
  const controls = el("div", "controls");
  controls.append(note, approve, reject);
  container.appendChild(controls);
}
