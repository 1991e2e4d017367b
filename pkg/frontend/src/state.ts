// View-model state for the two pages. All transitions are pure and
// synchronous so they can be unit-tested without a DOM; the pages wire
// these models to inputs and service calls.

import type {
  CalibrateResponse,
  DecideResponse,
  DecisionTableJson,
  DesignSpecPayload,
  EndpointEntry,
  PatientRowEntry,
  SimulateResponse,
  TableResponse,
} from "./types.js";

export interface DirtyFlags {
  calibration: boolean;
  table: boolean;
  oc: boolean;
}

/** Designer page: an editable spec plus the last results, flagged stale on any edit. */
export class DesignWorkspace {
  spec: DesignSpecPayload;
  calibration: CalibrateResponse | null = null;
  table: TableResponse | null = null;
  oc: SimulateResponse | null = null;
  dirty: DirtyFlags = { calibration: true, table: true, oc: true };
  error: string | null = null;

  constructor(spec: DesignSpecPayload) {
    this.spec = spec;
  }

  /** Any spec edit invalidates every dependent panel until fresh results land. */
  editSpec(patch: Partial<DesignSpecPayload>): void {
    this.spec = { ...this.spec, ...patch };
    this.dirty = { calibration: true, table: true, oc: true };
    this.error = null;
  }

  editEndpoint(index: number, patch: Partial<DesignSpecPayload["endpoints"][number]>): void {
    const endpoints = this.spec.endpoints.map((ep, i) => (i === index ? { ...ep, ...patch } : ep));
    this.editSpec({ endpoints });
  }

  applyCalibration(resp: CalibrateResponse): void {
    this.calibration = resp;
    this.dirty.calibration = false;
  }

  applyTable(resp: TableResponse): void {
    this.table = resp;
    this.dirty.table = false;
  }

  applyOc(resp: SimulateResponse): void {
    this.oc = resp;
    this.dirty.oc = false;
  }

  /** The exact delimited text the CLI writes; export copies it verbatim. */
  exportTableCsv(): string {
    if (!this.table || this.dirty.table) {
      throw new Error("no fresh table to export");
    }
    return this.table.csv;
  }
}

/** Monitor page: a loaded table plus the patient grid and the latest banner. */
export class MonitorSession {
  table: DecisionTableJson | null = null;
  windows: Record<string, number> = {};
  rows: PatientRowEntry[] = [];
  decision: DecideResponse | null = null;
  stale = true;
  error: string | null = null;

  loadTable(table: DecisionTableJson, windows: Record<string, number>): void {
    const missing = table.endpoints.filter((e) => !(e.endpoint in windows));
    if (missing.length > 0) {
      throw new Error(`missing assessment window for ${missing.map((m) => m.endpoint).join(", ")}`);
    }
    this.table = table;
    this.windows = { ...windows };
    this.rows = [];
    this.decision = null;
    this.stale = true;
    this.error = null;
  }

  endpointNames(): string[] {
    return this.table ? this.table.endpoints.map((e) => e.endpoint) : [];
  }

  private blankRow(id: string): PatientRowEntry {
    const endpoints: Record<string, EndpointEntry> = {};
    for (const name of this.endpointNames()) {
      endpoints[name] = { status: "pending", follow_up_days: 0 };
    }
    return { id, endpoints };
  }

  addRow(): PatientRowEntry {
    const row = this.blankRow(String(this.rows.length + 1));
    this.rows = [...this.rows, row];
    this.invalidate();
    return row;
  }

  removeRow(index: number): void {
    this.rows = this.rows.filter((_, i) => i !== index);
    this.invalidate();
  }

  editRow(index: number, endpoint: string, patch: Partial<EndpointEntry>): void {
    this.rows = this.rows.map((row, i) => {
      if (i !== index) return row;
      const current = row.endpoints[endpoint];
      if (current === undefined) throw new Error(`unknown endpoint ${endpoint}`);
      return {
        ...row,
        endpoints: { ...row.endpoints, [endpoint]: { ...current, ...patch } },
      };
    });
    this.invalidate();
  }

  /** Every edit knocks the banner stale until a fresh decision arrives. */
  private invalidate(): void {
    this.stale = true;
    this.decision = null;
    this.error = null;
  }

  /** Blocking validation: the entered cohort must match an analysis row. */
  validationError(): string | null {
    if (!this.table) return "no decision table loaded";
    if (this.rows.length === 0) return "enter at least one patient row";
    if (!this.table.looks.includes(this.rows.length)) {
      return `${this.rows.length} patients match no analysis row (${this.table.looks.join(", ")})`;
    }
    for (const row of this.rows) {
      for (const [name, entry] of Object.entries(row.endpoints)) {
        if (entry.status === "pending") {
          const fu = entry.follow_up_days ?? 0;
          if (fu < 0) return `patient ${row.id}: negative follow-up for ${name}`;
          const window = this.windows[name] ?? 0;
          if (fu > window) return `patient ${row.id}: pending follow-up beyond the ${name} window`;
        }
      }
    }
    return null;
  }

  buildDecidePayload(): { table: DecisionTableJson; rows: PatientRowEntry[]; windows: Record<string, number> } {
    const problem = this.validationError();
    if (problem) throw new Error(problem);
    if (!this.table) throw new Error("no decision table loaded");
    return { table: this.table, rows: this.rows, windows: this.windows };
  }

  applyDecision(resp: DecideResponse): void {
    this.decision = resp;
    this.stale = false;
    this.error = null;
  }

  applyError(message: string): void {
    this.error = message;
    this.decision = null;
    this.stale = false;
  }
}
