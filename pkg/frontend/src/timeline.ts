// Run timeline fed by the event stream: strictly ordered by sequence number,
// duplicate-free across reconnects, with a visible connection indicator.

import { EventPayload } from "./types.js";

export interface TimelineEntry {
  seq: number;
  kind: string;
  label: string;
  payload: Record<string, unknown>;
}

export type ConnectionState = "connecting" | "live" | "reconnecting" | "ended";

export class RunTimeline {
  readonly runId: string;
  private entries: TimelineEntry[] = [];
  private seen = new Set<number>();
  connection: ConnectionState = "connecting";

  constructor(runId: string) {
    this.runId = runId;
  }

  get lastSeenSeq(): number {
    return this.entries.length ? this.entries[this.entries.length - 1].seq : 0;
  }

  get length(): number {
    return this.entries.length;
  }

  list(): TimelineEntry[] {
    return [...this.entries];
  }

  // Returns true when the event was appended (false for duplicates replayed
  // by a reconnect). Out-of-order events indicate a broken stream.
  append(event: EventPayload): boolean {
    if (this.seen.has(event.seq)) return false;
    if (event.seq <= this.lastSeenSeq) return false;
    if (event.seq !== this.lastSeenSeq + 1) {
      throw new Error(
        `gap in event stream for ${this.runId}: got seq ${event.seq} after ${this.lastSeenSeq}`,
      );
    }
    this.seen.add(event.seq);
    this.entries.push({
      seq: event.seq,
      kind: event.kind,
      label: describeEvent(event),
      payload: event.payload,
    });
    return true;
  }

  resumeCursor(): number {
    return this.lastSeenSeq + 1;
  }
}

export function describeEvent(event: EventPayload): string {
  const p = event.payload as Record<string, unknown>;
  switch (event.kind) {
    case "status_change":
      return `status ${p.from} -> ${p.to}`;
    case "pass_completed":
      if (p.pass) return `reasoning pass: ${p.pass}`;
      return `step ${p.step ?? "?"}: ${p.action ?? ""}`;
    case "message_sent":
      return `${p.sender} -> ${p.recipient}: ${p.intent_tag}`;
    case "approval_requested":
      return `approval requested: ${p.approval_id}`;
    case "validation_result":
      return `validation: ${p.outcome}`;
    default:
      return event.kind;
  }
}

// Drives a timeline from a stream function with automatic resume: on stream
// failure it reconnects from the last-seen cursor; replayed events are
// dropped by the duplicate guard.
export async function followRun(
  timeline: RunTimeline,
  stream: (fromSeq: number, onEvent: (e: EventPayload) => void) => Promise<void>,
  opts: { maxReconnects?: number; onUpdate?: () => void } = {},
): Promise<void> {
  const maxReconnects = opts.maxReconnects ?? 5;
  let attempts = 0;
  for (;;) {
    try {
      timeline.connection = attempts === 0 ? "connecting" : "reconnecting";
      await stream(timeline.resumeCursor(), (e) => {
        timeline.connection = "live";
        timeline.append(e);
        opts.onUpdate?.();
      });
      timeline.connection = "ended";
      return;
    } catch (err) {
      attempts += 1;
      if (attempts > maxReconnects) throw err;
    }
  }
}
