// Payload types mirroring the service API. The console is a pure client:
// every displayed number originates from one of these payloads.

export type Level = "cell" | "band" | "sector" | "node" | "region" | "cluster";

export const LEVELS: Level[] = ["cell", "band", "sector", "node", "region", "cluster"];

export interface TopologyPayload {
  scenario?: string;
  clusters: string[];
  regions: { id: string; cluster: string }[];
  bands: string[];
  sectors: string[];
  nodes: { id: string; region: string; vendor: string; hardware_model: string;
           software_version: string }[];
  cells: { id: string; node: string; band: string; sector: string; region: string }[];
}

export type FindingKind = "change_point" | "anomaly" | "peer_outlier";

export interface DeviationRowPayload {
  rank: number;
  severity: number;
  kind: FindingKind;
  level: Level;
  element_id: string;
  kpi: string;
  timestamp: number;
  score: number;
  magnitude?: number;
  direction?: "up" | "down";
  peer_group?: string;
}

export interface DeviationTablePayload {
  scenario?: string;
  window: { start: number; end: number };
  rows: DeviationRowPayload[];
  summary: Record<string, Record<FindingKind, number>>;
  warnings: string[];
}

export interface KpiSeriesPayload {
  scenario: string;
  series: { element_id: string; kpi: string; points: [number, number][] }[];
}

export interface ActionPayload {
  action_id: string;
  kind: "revert_config_change" | "adjust_parameter" | "open_ticket";
  element_id: string;
  level: Level;
  hypothesis_id: string;
  guard_kpi: string;
  parameter: string | null;
  from_value: number | null;
  to_value: number | null;
  value_delta: number | null;
  evaluation_window: number;
  guard_threshold_pct: number;
  cm_ref: [string, string, number] | null;
}

export interface HypothesisPayload {
  id: string;
  cause_kind: string;
  element_id: string;
  level: Level;
  kpi: string | null;
  confidence: number;
  evidence_refs: string[];
  proposed_action: ActionPayload | null;
  rationale: string;
}

export interface PendingApprovalPayload {
  approval_id: string;
  run_id: string;
  action: ActionPayload;
  hypothesis: HypothesisPayload;
  precedents: string[];
  requested_at: number;
  decision: string | null;
  note: string;
}

export interface ValidationPayload {
  outcome: "confirmed" | "rolled_back";
  kpi_delta: Record<string, number>;
  pre_snapshot_id: string;
  post_snapshot_id: string;
  record_id: string;
  guard_kpi: string;
  pre_mean: number;
  post_mean: number;
}

export type RunStatus =
  | "running"
  | "awaiting_approval"
  | "validating"
  | "confirmed"
  | "rolled_back"
  | "completed"
  | "failed";

export interface RunStatePayload {
  run_id: string;
  mode: "workflow" | "agent" | "agentic";
  status: RunStatus;
  intent: unknown;
  approval_mode: string;
  backend: string;
  scenario: string;
  seed: number;
  pending_approval: PendingApprovalPayload | null;
  report: Record<string, unknown> | null;
  validation: ValidationPayload | null;
  error: { step: string; message: string } | null;
}

export type EventKind =
  | "status_change"
  | "pass_completed"
  | "message_sent"
  | "approval_requested"
  | "validation_result";

export interface EventPayload {
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
  emitted_at: number;
}

export interface ApiError {
  code: string;
  message: string;
  field_path?: string;
}

export class ApiRequestError extends Error {
  constructor(public status: number, public error: ApiError) {
    super(`${error.code}: ${error.message}`);
  }
}
