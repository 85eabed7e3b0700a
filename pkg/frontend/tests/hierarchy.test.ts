import { describe, expect, it } from "vitest";

import {
  badgeTotal,
  buildHierarchyExplorer,
  chartForSelection,
  collectNodesAtLevel,
  sumBadges,
} from "../src/hierarchy.js";
import { LEVELS } from "../src/types.js";
import { FixtureApi } from "./mockApi.js";

describe("hierarchy explorer on recorded fixtures", () => {
  it("badge counts at each level equal the deviation table's summary", async () => {
    const api = new FixtureApi({ scenario: "band_fault" });
    const [topology, table] = [await api.getTopology(), await api.getDeviations()];
    const explorer = buildHierarchyExplorer(topology, table);

    for (const level of LEVELS) {
      const summary = table.summary[level];
      if (!summary) continue;
      const badges = sumBadges(collectNodesAtLevel(explorer, level));
      expect(badges.change_point, `${level} change points`).toBe(summary.change_point);
      expect(badges.anomaly, `${level} anomalies`).toBe(summary.anomaly);
      expect(badges.peer_outlier, `${level} peer outliers`).toBe(summary.peer_outlier);
      expect(explorer.levelBadges[level]).toEqual(summary);
    }
  });

  it("band-fault fixture: band node shows its change point, member cells shifted", async () => {
    const api = new FixtureApi({ scenario: "band_fault" });
    const explorer = buildHierarchyExplorer(await api.getTopology(), await api.getDeviations());
    const b1 = explorer.groupings.bands.find((b) => b.elementId === "b1")!;
    expect(b1.badge.change_point).toBe(1);

    const memberCells = (await api.getTopology()).cells
      .filter((c) => c.band === "b1")
      .map((c) => c.id);
    const cells = collectNodesAtLevel(explorer, "cell");
    const shifted = cells.filter((c) => c.badge.change_point > 0).map((c) => c.elementId);
    for (const cell of memberCells) expect(shifted).toContain(cell);
  });

  it("event-free fixture: all badges zero", async () => {
    const api = new FixtureApi({ scenario: "event_free" });
    const explorer = buildHierarchyExplorer(await api.getTopology(), await api.getDeviations());
    for (const level of LEVELS) {
      for (const node of collectNodesAtLevel(explorer, level)) {
        expect(badgeTotal(node.badge), `${level}/${node.elementId}`).toBe(0);
      }
    }
  });

  it("selecting cell c1 charts 96 points for a one-day window", async () => {
    const api = new FixtureApi({ scenario: "band_fault" });
    const chart = chartForSelection(
      await api.getKpi(),
      await api.getDeviations(),
      "c1",
      "dl_throughput_mbps",
    );
    expect(chart.points).toHaveLength(96);
    // onset markers come from the API's change-point rows, never recomputed
    const table = await api.getDeviations();
    const cpRows = table.rows.filter(
      (r) => r.kind === "change_point" && r.element_id === "c1" && r.kpi === "dl_throughput_mbps",
    );
    expect(chart.onsetMarkers).toEqual(cpRows.map((r) => r.timestamp));
  });

  it("every displayed number originates from the API payload", async () => {
    const api = new FixtureApi({ scenario: "band_fault" });
    const table = await api.getDeviations();
    const explorer = buildHierarchyExplorer(await api.getTopology(), table);
    // findings attached to tree nodes are the payload rows themselves
    for (const node of collectNodesAtLevel(explorer, "band")) {
      for (const finding of node.findings) {
        expect(table.rows).toContainEqual(finding);
      }
    }
  });
});
