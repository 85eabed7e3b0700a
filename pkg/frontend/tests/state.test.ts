import { describe, expect, it } from "vitest";

import { SseParser } from "../src/api.js";
import { ConsoleStore, isValidDrillDown } from "../src/state.js";
import { EventPayload, TopologyPayload } from "../src/types.js";
import { loadFixture } from "./mockApi.js";

const TOPOLOGY = loadFixture<TopologyPayload>("topology_band_fault.json");

describe("console view state", () => {
  it("last-seen sequence never decreases", () => {
    const store = new ConsoleStore();
    store.noteEventSeen("run-0001", 5);
    store.noteEventSeen("run-0001", 3);
    store.noteEventSeen("run-0001", 7);
    expect(store.get().lastSeenSeq["run-0001"]).toBe(7);
  });

  it("updates are serialized even when re-entrant", () => {
    const store = new ConsoleStore();
    const order: number[] = [];
    let reentered = false;
    store.subscribe(() => {
      if (!reentered) {
        reentered = true;
        store.update((s) => {
          order.push(2);
          return s;
        });
      }
    });
    store.update((s) => {
      order.push(1);
      return s;
    });
    expect(order).toEqual([1, 2]);
  });

  it("accepts only valid hierarchy chains as drill-down paths", () => {
    const cell = TOPOLOGY.cells[0];
    const node = TOPOLOGY.nodes.find((n) => n.id === cell.node)!;
    const region = TOPOLOGY.regions.find((r) => r.id === node.region)!;
    const good = [
      { level: "cluster" as const, elementId: region.cluster },
      { level: "region" as const, elementId: region.id },
      { level: "node" as const, elementId: node.id },
      { level: "cell" as const, elementId: cell.id },
    ];
    expect(isValidDrillDown(good, TOPOLOGY)).toBe(true);
    expect(isValidDrillDown(good.slice(0, 2), TOPOLOGY)).toBe(true);
    // wrong order
    expect(isValidDrillDown([good[1], good[0]], TOPOLOGY)).toBe(false);
    // node not in that region
    const otherNode = TOPOLOGY.nodes.find((n) => n.region !== region.id);
    if (otherNode) {
      expect(
        isValidDrillDown(
          [good[0], good[1], { level: "node", elementId: otherNode.id }],
          TOPOLOGY,
        ),
      ).toBe(false);
    }
    // unknown element
    expect(
      isValidDrillDown([{ level: "cluster", elementId: "ghost" }], TOPOLOGY),
    ).toBe(false);
  });

  it("store rejects invalid drill-down paths", () => {
    const store = new ConsoleStore();
    expect(() =>
      store.setDrillDown([{ level: "cell", elementId: "c1" }], TOPOLOGY),
    ).toThrow(/invalid drill-down/);
  });
});

describe("sse parser", () => {
  const frame = (e: EventPayload) =>
    `id: ${e.seq}\nevent: ${e.kind}\ndata: ${JSON.stringify(e)}\n\n`;

  it("parses frames split across arbitrary chunk boundaries", () => {
    const events = loadFixture<EventPayload[]>("events_confirmed.json").slice(0, 5);
    const text = events.map(frame).join("") + "event: stream_end\ndata: {}\n\n";
    for (const chunkSize of [1, 3, 7, 50, text.length]) {
      const got: EventPayload[] = [];
      const parser = new SseParser((e) => got.push(e));
      for (let i = 0; i < text.length; i += chunkSize) {
        parser.push(text.slice(i, i + chunkSize));
      }
      parser.flush();
      expect(got.map((e) => e.seq)).toEqual(events.map((e) => e.seq));
    }
  });
});
