// Typed client for the /v1 service. The UI never computes statistics
// itself; every displayed number comes back from these calls.

import type {
  CalibrateResponse,
  CutoffParams,
  DecideResponse,
  DecisionTableJson,
  DesignSpecPayload,
  PatientRowEntry,
  SimulateResponse,
  TableResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function post<T>(url: string, body: unknown, signal?: AbortSignal): Promise<T> {
  const resp = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
    signal,
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const payload = await resp.json();
      detail = typeof payload.detail === "string" ? payload.detail : JSON.stringify(payload.detail);
    } catch {
      // keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return resp.json() as Promise<T>;
}

/** Rows keyed per endpoint, in the wire shape the service expects. */
export function rowsToWire(rows: PatientRowEntry[]): Record<string, unknown>[] {
  return rows.map((row) => {
    const wire: Record<string, unknown> = { id: row.id };
    for (const [name, entry] of Object.entries(row.endpoints)) {
      const cell: Record<string, unknown> = { status: entry.status };
      if (entry.status === "pending") {
        cell.follow_up_days = entry.follow_up_days ?? 0;
      }
      wire[name] = cell;
    }
    return wire;
  });
}

export class ApiClient {
  constructor(public baseUrl: string = "") {}

  calibrate(spec: DesignSpecPayload, signal?: AbortSignal): Promise<CalibrateResponse> {
    return post(`${this.baseUrl}/v1/calibrate`, { spec }, signal);
  }

  table(spec: DesignSpecPayload, params?: CutoffParams, signal?: AbortSignal): Promise<TableResponse> {
    return post(`${this.baseUrl}/v1/table`, { spec, params: params ?? null }, signal);
  }

  decide(
    table: DecisionTableJson,
    rows: PatientRowEntry[],
    windows: Record<string, number>,
    signal?: AbortSignal,
  ): Promise<DecideResponse> {
    return post(`${this.baseUrl}/v1/decide`, { table, rows: rowsToWire(rows), windows }, signal);
  }

  simulate(
    req: {
      scenario?: unknown;
      preset?: number;
      designs?: string[];
      replicates: number;
      seed: number;
    },
    signal?: AbortSignal,
  ): Promise<SimulateResponse> {
    return post(`${this.baseUrl}/v1/simulate`, req, signal);
  }
}

/**
 * Latest-wins scheduler: starting a new request aborts the one in flight,
 * so a burst of edits can never paint a stale response over a newer one.
 */
export class LatestWins {
  private controller: AbortController | null = null;

  async run<T>(fn: (signal: AbortSignal) => Promise<T>): Promise<T | undefined> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      return await fn(controller.signal);
    } catch (err) {
      if (controller.signal.aborted) return undefined;
      throw err;
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }
}
