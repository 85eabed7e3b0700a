// Approval panel state machine. The panel shows the proposed action with its
// motivating hypothesis, evidence references, and precedents; posts the
// operator decision; then renders the validation outcome on the same panel.

import { ConsoleApi } from "./api.js";
import { ApiRequestError, EventPayload, PendingApprovalPayload } from "./types.js";

export type PanelPhase =
  | "pending"      // decision buttons enabled
  | "posting"      // decision in flight; controls disabled
  | "validating"   // approved; waiting for the validation outcome
  | "confirmed"
  | "rolled_back"
  | "declined"     // rejected; run completed with the action declined
  | "conflict";    // decided elsewhere; panel refreshed

export interface PanelView {
  phase: PanelPhase;
  approval: PendingApprovalPayload;
  decisionNote: string;
  kpiDelta: Record<string, number> | null;
  conflictMessage: string | null;
  controlsEnabled: boolean;
}

export class ApprovalPanel {
  private phase: PanelPhase = "pending";
  private kpiDelta: Record<string, number> | null = null;
  private conflictMessage: string | null = null;
  private note = "";

  constructor(private api: ConsoleApi, private approval: PendingApprovalPayload) {}

  view(): PanelView {
    return {
      phase: this.phase,
      approval: this.approval,
      decisionNote: this.note,
      kpiDelta: this.kpiDelta,
      conflictMessage: this.conflictMessage,
      controlsEnabled: this.phase === "pending",
    };
  }

  async decide(decision: "approve" | "reject", note: string): Promise<PanelView> {
    if (this.phase !== "pending") return this.view();
    this.phase = "posting";
    this.note = note;
    try {
      await this.api.decideApproval(this.approval.approval_id, decision, note);
      this.phase = decision === "approve" ? "validating" : "declined";
    } catch (err) {
      if (err instanceof ApiRequestError && err.status === 409) {
        // decided elsewhere: refresh the panel with current run state
        this.conflictMessage = err.error.message;
        this.phase = "conflict";
        await this.refresh();
      } else {
        this.phase = "pending"; // transient failure: allow retry
        throw err;
      }
    }
    return this.view();
  }

  // Event-driven updates: the same stream that feeds the timeline moves the
  // panel from validating to its outcome.
  onEvent(event: EventPayload): PanelView {
    if (event.kind === "validation_result") {
      const outcome = event.payload.outcome as string;
      if (outcome === "confirmed" || outcome === "rolled_back") {
        this.phase = outcome;
        this.kpiDelta = (event.payload.kpi_delta as Record<string, number>) ?? null;
      }
    }
    if (event.kind === "status_change") {
      const to = event.payload.to as string;
      if (to === "validating" && this.phase === "posting") this.phase = "validating";
      if (to === "completed" && (this.phase === "posting" || this.phase === "pending")) {
        if (event.payload.reason === "action_declined") this.phase = "declined";
      }
    }
    return this.view();
  }

  private async refresh(): Promise<void> {
    const run = await this.api.getRun(this.approval.run_id);
    if (run.status === "validating") this.phase = "validating";
    else if (run.status === "confirmed" || run.status === "rolled_back") {
      this.phase = run.status;
      this.kpiDelta = run.validation?.kpi_delta ?? null;
    } else if (run.status === "completed") this.phase = "declined";
  }
}
