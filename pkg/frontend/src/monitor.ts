// Monitor page wiring: load a decision table, enter per-patient follow-up
// rows, and read the live Go/NoGo/Suspend banner.

import { ApiClient, ApiError, LatestWins } from "./api.js";
import { bannerFor, essBars, tessGauge } from "./charts.js";
import { MonitorSession } from "./state.js";
import type { DecisionTableJson, PatientStatus } from "./types.js";

export class MonitorPage {
  session = new MonitorSession();
  private inflight = new LatestWins();

  constructor(private api: ApiClient, private root: HTMLElement) {}

  mount(): void {
    this.root.innerHTML = `
      <section>
        <h2>Decision table</h2>
        <label>Table JSON <input id="table-file" type="file" accept=".json"></label>
        <label>Windows (name=days, comma separated) <input id="windows" type="text" placeholder="ORR=120"></label>
        <p id="table-summary">no table loaded</p>
      </section>
      <section>
        <h2>Patients <button id="add-row">Add patient</button></h2>
        <table class="patient-grid">
          <thead id="grid-head"></thead>
          <tbody id="grid-body"></tbody>
        </table>
      </section>
      <section>
        <h2>Decision</h2>
        <div id="banner" class="banner idle">enter patient rows to evaluate</div>
        <div id="gauges"></div>
        <div id="ess-panel"></div>
      </section>
    `;
    this.byId<HTMLInputElement>("table-file").addEventListener("change", (ev) => {
      const input = ev.target as HTMLInputElement;
      const file = input.files?.[0];
      if (file) void this.loadTableFile(file);
    });
    this.byId<HTMLButtonElement>("add-row").addEventListener("click", () => {
      this.session.addRow();
      this.renderGrid();
      void this.evaluate();
    });
  }

  private byId<T extends HTMLElement>(id: string): T {
    const el = this.root.querySelector(`#${id}`);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  }

  private parseWindows(): Record<string, number> {
    const text = this.byId<HTMLInputElement>("windows").value;
    const windows: Record<string, number> = {};
    for (const part of text.split(",")) {
      const [name, value] = part.split("=").map((s) => s.trim());
      if (name && value) windows[name] = Number(value);
    }
    return windows;
  }

  private async loadTableFile(file: File): Promise<void> {
    const table = JSON.parse(await file.text()) as DecisionTableJson;
    this.session.loadTable(table, this.parseWindows());
    this.byId("table-summary").textContent =
      `${table.structure} design, analyses at ${table.looks.join(", ")} patients`;
    this.renderGrid();
    this.renderDecision();
  }

  private renderGrid(): void {
    const names = this.session.endpointNames();
    this.byId("grid-head").innerHTML =
      `<tr><th>id</th>${names.map((n) => `<th>${n} status</th><th>${n} follow-up</th>`).join("")}<th></th></tr>`;
    const body = this.byId<HTMLTableSectionElement>("grid-body");
    body.innerHTML = "";
    this.session.rows.forEach((row, index) => {
      const tr = document.createElement("tr");
      const cells: string[] = [`<td>${row.id}</td>`];
      for (const name of names) {
        const entry = row.endpoints[name];
        if (!entry) continue;
        cells.push(`
          <td><select data-row="${index}" data-endpoint="${name}" data-field="status">
            ${(["pending", "event", "no_event"] as PatientStatus[])
              .map((s) => `<option value="${s}" ${entry.status === s ? "selected" : ""}>${s}</option>`)
              .join("")}
          </select></td>
          <td><input type="number" min="0" value="${entry.follow_up_days ?? 0}"
               data-row="${index}" data-endpoint="${name}" data-field="follow_up_days"
               ${entry.status === "pending" ? "" : "disabled"}></td>`);
      }
      cells.push(`<td><button data-remove="${index}">remove</button></td>`);
      tr.innerHTML = cells.join("");
      body.appendChild(tr);
    });
    body.querySelectorAll("select,input").forEach((el) => {
      el.addEventListener("change", (ev) => this.onCellEdit(ev));
    });
    body.querySelectorAll("button[data-remove]").forEach((el) => {
      el.addEventListener("click", (ev) => {
        const index = Number((ev.target as HTMLElement).dataset.remove);
        this.session.removeRow(index);
        this.renderGrid();
        void this.evaluate();
      });
    });
  }

  private onCellEdit(ev: Event): void {
    const el = ev.target as HTMLInputElement | HTMLSelectElement;
    const index = Number(el.dataset.row);
    const endpoint = el.dataset.endpoint ?? "";
    if (el.dataset.field === "status") {
      this.session.editRow(index, endpoint, { status: el.value as PatientStatus });
    } else {
      this.session.editRow(index, endpoint, { follow_up_days: Number(el.value) });
    }
    this.renderGrid();
    void this.evaluate();
  }

  /** Re-evaluate after every edit; the banner is never left showing stale results. */
  async evaluate(): Promise<void> {
    this.renderDecision();
    const problem = this.session.validationError();
    if (problem) {
      this.session.applyError(problem);
      this.renderDecision();
      return;
    }
    const payload = this.session.buildDecidePayload();
    await this.inflight.run(async (signal) => {
      try {
        const decision = await this.api.decide(payload.table, payload.rows, payload.windows, signal);
        this.session.applyDecision(decision);
      } catch (err) {
        if (err instanceof ApiError) {
          this.session.applyError(err.detail);
        } else {
          throw err;
        }
      }
      this.renderDecision();
    });
  }

  private renderDecision(): void {
    const banner = this.byId("banner");
    const { kind, text } = bannerFor(this.session.decision, this.session.error);
    banner.className = `banner ${kind}${this.session.stale ? " stale" : ""}`;
    banner.textContent = this.session.stale && !this.session.error ? `${text} (recomputing...)` : text;
    const gauges = this.byId("gauges");
    const essPanel = this.byId("ess-panel");
    const decision = this.session.decision;
    if (!decision) {
      gauges.innerHTML = "";
      essPanel.innerHTML = "";
      return;
    }
    gauges.innerHTML = decision.endpoints
      .map(
        (v) =>
          `<figure><figcaption>${v.endpoint}</figcaption>` +
          tessGauge(v.tess, v.threshold, decision.n_enrolled) +
          "</figure>",
      )
      .join("");
    essPanel.innerHTML = Object.entries(decision.per_patient_ess)
      .map(([name, patients]) => `<figure><figcaption>${name} credit</figcaption>${essBars(patients)}</figure>`)
      .join("");
  }
}
