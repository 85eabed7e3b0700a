// Hierarchy explorer view-model: a drillable tree whose severity badges come
// straight from the deviation table's per-level summary counts (the console
// never recomputes analytics client-side).

import {
  DeviationRowPayload,
  DeviationTablePayload,
  FindingKind,
  KpiSeriesPayload,
  Level,
  TopologyPayload,
} from "./types.js";

export interface Badge {
  change_point: number;
  anomaly: number;
  peer_outlier: number;
}

export interface HierarchyNode {
  level: Level;
  elementId: string;
  badge: Badge;
  findings: DeviationRowPayload[];
  children: HierarchyNode[];
}

export interface HierarchyExplorer {
  root: HierarchyNode[]; // clusters
  groupings: { bands: HierarchyNode[]; sectors: HierarchyNode[] };
  levelBadges: Record<string, Badge>; // straight copy of table.summary
}

const ZERO: Badge = { change_point: 0, anomaly: 0, peer_outlier: 0 };

export function buildHierarchyExplorer(
  topology: TopologyPayload,
  table: DeviationTablePayload,
): HierarchyExplorer {
  const findingsByElement = new Map<string, DeviationRowPayload[]>();
  for (const row of table.rows) {
    const key = `${row.level}/${row.element_id}`;
    const list = findingsByElement.get(key) ?? [];
    list.push(row);
    findingsByElement.set(key, list);
  }

  const node = (level: Level, elementId: string, children: HierarchyNode[] = []):
    HierarchyNode => {
    const findings = findingsByElement.get(`${level}/${elementId}`) ?? [];
    const badge: Badge = { ...ZERO };
    for (const f of findings) badge[f.kind as FindingKind] += 1;
    return { level, elementId, badge, findings, children };
  };

  const cellsByNode = new Map<string, HierarchyNode[]>();
  for (const c of topology.cells) {
    const list = cellsByNode.get(c.node) ?? [];
    list.push(node("cell", c.id));
    cellsByNode.set(c.node, list);
  }
  const nodesByRegion = new Map<string, HierarchyNode[]>();
  for (const n of topology.nodes) {
    const list = nodesByRegion.get(n.region) ?? [];
    list.push(node("node", n.id, cellsByNode.get(n.id) ?? []));
    nodesByRegion.set(n.region, list);
  }
  const regionsByCluster = new Map<string, HierarchyNode[]>();
  for (const r of topology.regions) {
    const list = regionsByCluster.get(r.cluster) ?? [];
    list.push(node("region", r.id, nodesByRegion.get(r.id) ?? []));
    regionsByCluster.set(r.cluster, list);
  }
  const root = topology.clusters.map((cl) => node("cluster", cl, regionsByCluster.get(cl) ?? []));

  const levelBadges: Record<string, Badge> = {};
  for (const [level, counts] of Object.entries(table.summary)) {
    levelBadges[level] = {
      change_point: counts.change_point ?? 0,
      anomaly: counts.anomaly ?? 0,
      peer_outlier: counts.peer_outlier ?? 0,
    };
  }

  return {
    root,
    groupings: {
      bands: topology.bands.map((b) => node("band", b)),
      sectors: topology.sectors.map((s) => node("sector", s)),
    },
    levelBadges,
  };
}

export function badgeTotal(b: Badge): number {
  return b.change_point + b.anomaly + b.peer_outlier;
}

export function sumBadges(nodes: HierarchyNode[]): Badge {
  const total: Badge = { ...ZERO };
  for (const n of nodes) {
    total.change_point += n.badge.change_point;
    total.anomaly += n.badge.anomaly;
    total.peer_outlier += n.badge.peer_outlier;
  }
  return total;
}

export function collectNodesAtLevel(explorer: HierarchyExplorer, level: Level): HierarchyNode[] {
  if (level === "band") return explorer.groupings.bands;
  if (level === "sector") return explorer.groupings.sectors;
  const out: HierarchyNode[] = [];
  const walk = (nodes: HierarchyNode[]) => {
    for (const n of nodes) {
      if (n.level === level) out.push(n);
      walk(n.children);
    }
  };
  walk(explorer.root);
  return out;
}

// Chart input for a selected element: raw points plus change-point onset
// markers, both verbatim from API payloads.
export interface ChartSeries {
  elementId: string;
  kpi: string;
  points: [number, number][];
  onsetMarkers: number[];
}

export function chartForSelection(
  series: KpiSeriesPayload,
  table: DeviationTablePayload,
  elementId: string,
  kpi: string,
): ChartSeries {
  const match = series.series.find((s) => s.element_id === elementId && s.kpi === kpi);
  const onsetMarkers = table.rows
    .filter((r) => r.kind === "change_point" && r.element_id === elementId && r.kpi === kpi)
    .map((r) => r.timestamp);
  return {
    elementId,
    kpi,
    points: match?.points ?? [],
    onsetMarkers,
  };
}
