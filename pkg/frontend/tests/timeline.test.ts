import { describe, expect, it } from "vitest";

import { followRun, RunTimeline } from "../src/timeline.js";
import { EventPayload } from "../src/types.js";
import { FixtureApi, loadFixture } from "./mockApi.js";

const EVENTS = loadFixture<EventPayload[]>("events_confirmed.json");

describe("run timeline", () => {
  it("timeline order equals event sequence order", () => {
    const tl = new RunTimeline("run-0001");
    for (const e of EVENTS) tl.append(e);
    expect(tl.list().map((e) => e.seq)).toEqual(EVENTS.map((e) => e.seq));
    expect(tl.length).toBe(EVENTS.length);
  });

  it("replayed events on reconnect produce zero duplicates", async () => {
    const api = new FixtureApi({ runTag: "confirmed" });
    const tl = new RunTimeline("run-0001");
    // first half, then a resume that overlaps 3 already-seen events
    for (const e of EVENTS.slice(0, 10)) tl.append(e);
    await api.streamWithOverlap(tl.resumeCursor(), 3, (e) => void tl.append(e));
    const seqs = tl.list().map((e) => e.seq);
    expect(seqs).toEqual([...new Set(seqs)]);
    expect(seqs).toEqual(EVENTS.map((e) => e.seq));
  });

  it("a gap in the stream is an error, not a silent hole", () => {
    const tl = new RunTimeline("run-0001");
    tl.append(EVENTS[0]);
    expect(() => tl.append(EVENTS[2])).toThrow(/gap/);
  });

  it("followRun auto-resumes after a dropped connection without duplicates", async () => {
    const api = new FixtureApi({ runTag: "confirmed", interruptAfter: 7 });
    const tl = new RunTimeline("run-0001");
    await followRun(tl, (fromSeq, onEvent) =>
      api.streamEvents("run-0001", fromSeq, onEvent));
    expect(api.streamAttempts).toBe(2);
    expect(tl.list().map((e) => e.seq)).toEqual(EVENTS.map((e) => e.seq));
    expect(tl.connection).toBe("ended");
  });

  it("terminal-run replay renders the exact recorded order with labels", () => {
    const tl = new RunTimeline("run-0001");
    for (const e of EVENTS) tl.append(e);
    const labels = tl.list().map((e) => e.label);
    expect(labels.some((l) => l.startsWith("status running -> awaiting_approval"))).toBe(true);
    expect(labels.some((l) => l === "validation: confirmed")).toBe(true);
    expect(labels.filter((l) => l.includes("->")).length).toBeGreaterThan(0);
  });
});
