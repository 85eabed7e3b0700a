// Single serialized state container for the console view.

import { Level, LEVELS, TopologyPayload } from "./types.js";

export interface ConsoleViewState {
  selectedRunId: string | null;
  drillDownPath: { level: Level; elementId: string }[];
  activeKpis: string[];
  liveFollow: boolean;
  lastSeenSeq: Record<string, number>; // per run id; never decreases
}

export function initialViewState(): ConsoleViewState {
  return {
    selectedRunId: null,
    drillDownPath: [],
    activeKpis: ["dl_throughput_mbps"],
    liveFollow: true,
    lastSeenSeq: {},
  };
}

type Listener = (state: ConsoleViewState) => void;

export class ConsoleStore {
  private state = initialViewState();
  private listeners: Listener[] = [];
  private updating = false;
  private queue: ((s: ConsoleViewState) => ConsoleViewState)[] = [];

  get(): ConsoleViewState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  // Updates are serialized: re-entrant update() calls queue behind the
  // in-flight one instead of interleaving.
  update(fn: (s: ConsoleViewState) => ConsoleViewState): void {
    this.queue.push(fn);
    if (this.updating) return;
    this.updating = true;
    try {
      while (this.queue.length) {
        const next = this.queue.shift()!;
        this.state = next(this.state);
      }
    } finally {
      this.updating = false;
    }
    for (const listener of this.listeners) listener(this.state);
  }

  noteEventSeen(runId: string, seq: number): void {
    this.update((s) => {
      const current = s.lastSeenSeq[runId] ?? 0;
      if (seq <= current) return s; // the cursor never decreases
      return { ...s, lastSeenSeq: { ...s.lastSeenSeq, [runId]: seq } };
    });
  }

  selectRun(runId: string | null): void {
    this.update((s) => ({ ...s, selectedRunId: runId }));
  }

  setDrillDown(path: { level: Level; elementId: string }[], topology: TopologyPayload): void {
    if (!isValidDrillDown(path, topology)) {
      throw new Error(`invalid drill-down path: ${path.map((p) => p.elementId).join(" > ")}`);
    }
    this.update((s) => ({ ...s, drillDownPath: path }));
  }
}

// A valid drill-down path descends the containment chain
// cluster > region > node > cell, starting at a cluster, each element
// contained in the previous one.
export function isValidDrillDown(
  path: { level: Level; elementId: string }[],
  topology: TopologyPayload,
): boolean {
  const chain: Level[] = ["cluster", "region", "node", "cell"];
  if (path.length > chain.length) return false;
  for (let i = 0; i < path.length; i++) {
    const { level, elementId } = path[i];
    if (level !== chain[i]) return false;
    if (!elementExists(topology, level, elementId)) return false;
    if (i > 0 && !isChildOf(topology, path[i - 1], path[i])) return false;
  }
  return true;
}

export function elementExists(topology: TopologyPayload, level: Level, id: string): boolean {
  switch (level) {
    case "cluster":
      return topology.clusters.includes(id);
    case "region":
      return topology.regions.some((r) => r.id === id);
    case "node":
      return topology.nodes.some((n) => n.id === id);
    case "cell":
      return topology.cells.some((c) => c.id === id);
    case "band":
      return topology.bands.includes(id);
    case "sector":
      return topology.sectors.includes(id);
    default:
      return LEVELS.includes(level);
  }
}

function isChildOf(
  topology: TopologyPayload,
  parent: { level: Level; elementId: string },
  child: { level: Level; elementId: string },
): boolean {
  if (parent.level === "cluster" && child.level === "region") {
    return topology.regions.some((r) => r.id === child.elementId && r.cluster === parent.elementId);
  }
  if (parent.level === "region" && child.level === "node") {
    return topology.nodes.some((n) => n.id === child.elementId && n.region === parent.elementId);
  }
  if (parent.level === "node" && child.level === "cell") {
    return topology.cells.some((c) => c.id === child.elementId && c.node === parent.elementId);
  }
  return false;
}
