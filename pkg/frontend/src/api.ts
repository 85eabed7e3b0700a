// Thin typed client over the service endpoints. The fetch function is
// injectable so the test suite can run against recorded fixtures.

import {
  ApiRequestError,
  DeviationTablePayload,
  EventPayload,
  KpiSeriesPayload,
  PendingApprovalPayload,
  RunStatePayload,
  TopologyPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ConsoleApi {
  getTopology(scenario: string): Promise<TopologyPayload>;
  getDeviations(scenario: string, start?: number, end?: number): Promise<DeviationTablePayload>;
  getKpi(params: {
    scenario: string;
    elements?: string[];
    kpis?: string[];
    level?: string;
    start?: number;
    end?: number;
  }): Promise<KpiSeriesPayload>;
  getRun(runId: string): Promise<RunStatePayload>;
  listRuns(): Promise<RunStatePayload[]>;
  listApprovals(): Promise<PendingApprovalPayload[]>;
  decideApproval(approvalId: string, decision: "approve" | "reject", note: string):
    Promise<{ approval_id: string; decision: string; note: string }>;
  streamEvents(runId: string, fromSeq: number, onEvent: (e: EventPayload) => void):
    Promise<void>;
}

export class HttpConsoleApi implements ConsoleApi {
  constructor(private base: string, private fetchFn: FetchLike = fetch.bind(globalThis)) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.base + path);
    return this.parse<T>(resp);
  }

  private async parse<T>(resp: Response): Promise<T> {
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiRequestError(resp.status, body.error ?? {
        code: "http_error",
        message: `HTTP ${resp.status}`,
      });
    }
    return body as T;
  }

  getTopology(scenario: string): Promise<TopologyPayload> {
    return this.get(`/topology?scenario=${encodeURIComponent(scenario)}`);
  }

  getDeviations(scenario: string, start?: number, end?: number): Promise<DeviationTablePayload> {
    const q = new URLSearchParams({ scenario });
    if (start !== undefined) q.set("start", String(start));
    if (end !== undefined) q.set("end", String(end));
    return this.get(`/deviations?${q}`);
  }

  getKpi(params: {
    scenario: string;
    elements?: string[];
    kpis?: string[];
    level?: string;
    start?: number;
    end?: number;
  }): Promise<KpiSeriesPayload> {
    const q = new URLSearchParams({ scenario: params.scenario });
    if (params.elements?.length) q.set("elements", params.elements.join(","));
    if (params.kpis?.length) q.set("kpis", params.kpis.join(","));
    if (params.level) q.set("level", params.level);
    if (params.start !== undefined) q.set("start", String(params.start));
    if (params.end !== undefined) q.set("end", String(params.end));
    return this.get(`/kpi?${q}`);
  }

  getRun(runId: string): Promise<RunStatePayload> {
    return this.get(`/runs/${encodeURIComponent(runId)}`);
  }

  async listRuns(): Promise<RunStatePayload[]> {
    const body = await this.get<{ runs: RunStatePayload[] }>("/runs");
    return body.runs;
  }

  async listApprovals(): Promise<PendingApprovalPayload[]> {
    const body = await this.get<{ approvals: PendingApprovalPayload[] }>("/approvals");
    return body.approvals;
  }

  async decideApproval(approvalId: string, decision: "approve" | "reject", note: string) {
    const resp = await this.fetchFn(
      `${this.base}/approvals/${encodeURIComponent(approvalId)}/decision`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ decision, note }),
      },
    );
    return this.parse<{ approval_id: string; decision: string; note: string }>(resp);
  }

  async streamEvents(
    runId: string,
    fromSeq: number,
    onEvent: (e: EventPayload) => void,
  ): Promise<void> {
    const resp = await this.fetchFn(
      `${this.base}/runs/${encodeURIComponent(runId)}/events?from=${fromSeq}`,
    );
    if (!resp.ok || !resp.body) {
      const body = await resp.json().catch(() => ({}));
      throw new ApiRequestError(resp.status, body.error ?? {
        code: "http_error",
        message: `HTTP ${resp.status}`,
      });
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser(onEvent);
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      parser.push(decoder.decode(value, { stream: true }));
    }
    parser.flush();
  }
}

// Incremental parser for the service's SSE framing:
//   id: <seq>\nevent: <kind>\ndata: <json>\n\n
// The terminal frame is `event: stream_end`.
export class SseParser {
  private buffer = "";

  constructor(private onEvent: (e: EventPayload) => void) {}

  push(chunk: string): void {
    this.buffer += chunk;
    for (;;) {
      const split = this.buffer.indexOf("\n\n");
      if (split < 0) return;
      const frame = this.buffer.slice(0, split);
      this.buffer = this.buffer.slice(split + 2);
      this.handleFrame(frame);
    }
  }

  flush(): void {
    if (this.buffer.trim().length) {
      this.handleFrame(this.buffer);
      this.buffer = "";
    }
  }

  private handleFrame(frame: string): void {
    let event = "";
    let data = "";
    for (const line of frame.split("\n")) {
      if (line.startsWith("event: ")) event = line.slice(7).trim();
      else if (line.startsWith("data: ")) data = line.slice(6);
    }
    if (!event || event === "stream_end") return;
    if (!data) return;
    this.onEvent(JSON.parse(data) as EventPayload);
  }
}
