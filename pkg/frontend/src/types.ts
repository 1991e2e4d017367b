// Shared payload types mirroring the service's /v1 schema.

export type Monitor = "futility" | "toxicity";
export type Structure = "single" | "co-primary" | "efficacy-toxicity";
export type Action = "Go" | "NoGo" | "Suspend";
export type PatientStatus = "event" | "no_event" | "pending";

export interface EndpointSpec {
  name: string;
  monitor: Monitor;
  event_scores: boolean;
  window_days: number;
  phi: number;
  null_rate: number;
  alt_rate: number;
  prior?: [number, number];
}

export interface DesignSpecPayload {
  name: string;
  structure: Structure;
  alpha: number;
  max_n: number;
  looks: number[];
  suspension_mode?: string;
  association_log_odds?: number;
  endpoints: EndpointSpec[];
}

export interface CutoffParams {
  C: number;
  gamma: number;
}

export interface CalibrateResponse {
  params: CutoffParams;
  summary: {
    type_i_error: number;
    power: number;
    expected_n_null: number;
    expected_n_alt: number;
  };
}

export interface LookBlockJson {
  n: number;
  cutoff: number | null;
  suspend_min: number;
  stop_bound: number;
  go_bound: number;
  thresholds: Record<string, number>;
  is_final: boolean;
}

export interface EndpointTableJson {
  endpoint: string;
  monitor: Monitor;
  phi: number;
  prior: number[];
  event_scores: boolean;
  blocks: LookBlockJson[];
}

export interface DecisionTableJson {
  version: number;
  kind: string;
  name: string;
  structure: Structure;
  max_n: number;
  looks: number[];
  alpha: number;
  suspension_mode: string;
  params: CutoffParams | null;
  hypotheses: Record<string, { phi: number; null: number; alt: number }>;
  rounded: boolean;
  endpoints: EndpointTableJson[];
}

export interface TableResponse {
  table: DecisionTableJson;
  csv: string;
}

export interface EndpointVerdict {
  endpoint: string;
  status: "go" | "stop" | "suspend";
  x: number;
  n_pending: number;
  tess: number;
  threshold: number | null;
  detail: string;
}

export interface PatientEss {
  id: string;
  status: PatientStatus;
  ess: number;
}

export interface DecideResponse {
  action: Action;
  reason: string;
  n_enrolled: number;
  endpoints: EndpointVerdict[];
  per_patient_ess: Record<string, PatientEss[]>;
}

export interface OCReportJson {
  scenario: string;
  design: string;
  replicates: number;
  accept_rate: number;
  accept_se: number;
  expected_n: number;
  n_se: number;
  mean_duration_months: number;
  duration_se: number;
  stop_reasons: Record<string, number>;
}

export interface SimulateResponse {
  report: { meta: Record<string, unknown>; reports: OCReportJson[] };
  csv: string;
}

export interface EndpointEntry {
  status: PatientStatus;
  follow_up_days?: number;
}

export interface PatientRowEntry {
  id: string;
  endpoints: Record<string, EndpointEntry>;
}
