// Designer page wiring: edit the design spec, recalibrate, and view the
// table and simulated operating characteristics side by side.

import { ApiClient, ApiError, LatestWins } from "./api.js";
import { ocPanels } from "./charts.js";
import { DesignWorkspace } from "./state.js";
import type { DesignSpecPayload } from "./types.js";

export const TEMPLATES: Record<string, DesignSpecPayload> = {
  single: {
    name: "single-endpoint",
    structure: "single",
    alpha: 0.1,
    max_n: 40,
    looks: [10, 20, 30, 40],
    endpoints: [
      {
        name: "ORR",
        monitor: "futility",
        event_scores: true,
        window_days: 120,
        phi: 0.2,
        null_rate: 0.2,
        alt_rate: 0.4,
      },
    ],
  },
  "co-primary": {
    name: "co-primary",
    structure: "co-primary",
    alpha: 0.1,
    max_n: 45,
    looks: [15, 30, 45],
    endpoints: [
      {
        name: "ORR",
        monitor: "futility",
        event_scores: true,
        window_days: 60,
        phi: 0.45,
        null_rate: 0.45,
        alt_rate: 0.65,
      },
      {
        name: "PFS4",
        monitor: "futility",
        event_scores: false,
        window_days: 120,
        phi: 0.3,
        null_rate: 0.3,
        alt_rate: 0.45,
      },
    ],
  },
  "efficacy-toxicity": {
    name: "efficacy-toxicity",
    structure: "efficacy-toxicity",
    alpha: 0.1,
    max_n: 46,
    looks: [12, 24, 36, 46],
    endpoints: [
      {
        name: "ORR",
        monitor: "futility",
        event_scores: true,
        window_days: 120,
        phi: 0.3,
        null_rate: 0.3,
        alt_rate: 0.5,
      },
      {
        name: "DLT",
        monitor: "toxicity",
        event_scores: true,
        window_days: 60,
        phi: 0.3,
        null_rate: 0.3,
        alt_rate: 0.18,
      },
    ],
  },
};

const DEFAULT_SPEC = TEMPLATES.single!;

export class DesignerPage {
  workspace = new DesignWorkspace(DEFAULT_SPEC);
  private inflight = new LatestWins();

  constructor(private api: ApiClient, private root: HTMLElement) {}

  mount(): void {
    this.root.innerHTML = `
      <section class="spec-form">
        <h2>Design</h2>
        <label>Template
          <select id="template">
            ${Object.keys(TEMPLATES).map((k) => `<option value="${k}">${k}</option>`).join("")}
          </select>
        </label>
        <div id="endpoint-forms"></div>
        <label>Maximum sample size <input id="max-n" type="number" min="4" max="200"></label>
        <label>Looks (comma separated) <input id="looks" type="text"></label>
        <label>Type I error target <input id="alpha" type="number" step="0.01" min="0.01" max="0.5"></label>
        <button id="recalculate">Recalculate</button>
        <p id="designer-error" class="error" hidden></p>
      </section>
      <section>
        <h2>Calibration <span id="calibration-stale" class="stale-flag" hidden>stale</span></h2>
        <div id="calibration-panel">not calibrated yet</div>
      </section>
      <section>
        <h2>Decision table <span id="table-stale" class="stale-flag" hidden>stale</span>
          <button id="export-table" disabled>Export CSV</button></h2>
        <pre id="table-panel" class="table-panel"></pre>
      </section>
      <section>
        <h2>Operating characteristics <span id="oc-stale" class="stale-flag" hidden>stale</span></h2>
        <label>Replicates <input id="replicates" type="number" value="2000" min="100" max="20000"></label>
        <div id="oc-panel" class="oc-panel"></div>
      </section>
    `;
    this.fillForm();
    this.byId<HTMLSelectElement>("template").addEventListener("change", (ev) => {
      const key = (ev.target as HTMLSelectElement).value;
      const template = TEMPLATES[key];
      if (template) {
        this.workspace = new DesignWorkspace(template);
        this.fillForm();
        this.renderStale();
        void this.refresh();
      }
    });
    this.byId<HTMLButtonElement>("recalculate").addEventListener("click", () => {
      this.readForm();
      void this.refresh();
    });
    this.byId<HTMLButtonElement>("export-table").addEventListener("click", () => this.exportCsv());
    this.renderStale();
    void this.refresh();
  }

  private byId<T extends HTMLElement>(id: string): T {
    const el = this.root.querySelector(`#${id}`);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  }

  private fillForm(): void {
    const spec = this.workspace.spec;
    const forms = this.byId<HTMLDivElement>("endpoint-forms");
    forms.innerHTML = spec.endpoints
      .map(
        (ep, i) => `
        <fieldset data-endpoint-form="${i}">
          <legend>${ep.name} (${ep.monitor})</legend>
          <label>Threshold (phi) <input data-ep="${i}" data-field="phi" type="number" step="0.05" min="0.01" max="0.99" value="${ep.phi}"></label>
          <label>Null rate <input data-ep="${i}" data-field="null_rate" type="number" step="0.05" min="0.01" max="0.99" value="${ep.null_rate}"></label>
          <label>Alternative rate <input data-ep="${i}" data-field="alt_rate" type="number" step="0.05" min="0.01" max="0.99" value="${ep.alt_rate}"></label>
        </fieldset>`,
      )
      .join("");
    this.byId<HTMLInputElement>("max-n").value = String(spec.max_n);
    this.byId<HTMLInputElement>("looks").value = spec.looks.join(", ");
    this.byId<HTMLInputElement>("alpha").value = String(spec.alpha);
  }

  private readForm(): void {
    const maxN = Number(this.byId<HTMLInputElement>("max-n").value);
    const alpha = Number(this.byId<HTMLInputElement>("alpha").value);
    const looks = this.byId<HTMLInputElement>("looks")
      .value.split(",")
      .map((s) => Number(s.trim()))
      .filter((n) => Number.isFinite(n) && n > 0);
    this.workspace.editSpec({ alpha, max_n: maxN, looks });
    this.root.querySelectorAll<HTMLInputElement>("[data-ep]").forEach((input) => {
      const index = Number(input.dataset.ep);
      const field = input.dataset.field as "phi" | "null_rate" | "alt_rate";
      this.workspace.editEndpoint(index, { [field]: Number(input.value) });
    });
    this.renderStale();
  }

  private renderStale(): void {
    this.byId("calibration-stale").hidden = !this.workspace.dirty.calibration;
    this.byId("table-stale").hidden = !this.workspace.dirty.table;
    this.byId("oc-stale").hidden = !this.workspace.dirty.oc;
    this.byId<HTMLButtonElement>("export-table").disabled =
      this.workspace.dirty.table || this.workspace.table === null;
  }

  async refresh(): Promise<void> {
    const errorEl = this.byId<HTMLParagraphElement>("designer-error");
    errorEl.hidden = true;
    const replicates = Number(this.byId<HTMLInputElement>("replicates").value) || 2000;
    const spec = this.workspace.spec;
    await this.inflight.run(async (signal) => {
      try {
        const calibration = await this.api.calibrate(spec, signal);
        this.workspace.applyCalibration(calibration);
        const table = await this.api.table(spec, calibration.params, signal);
        this.workspace.applyTable(table);
        const oc = await this.api.simulate(
          {
            scenario: {
              name: spec.name || "designer",
              true_rates: Object.fromEntries(spec.endpoints.map((e) => [e.name, e.alt_rate])),
              designs: ["tess", "bop2"],
              design: spec,
            },
            replicates,
            seed: 20240101,
          },
          signal,
        );
        this.workspace.applyOc(oc);
      } catch (err) {
        if (err instanceof ApiError) {
          this.workspace.error = err.detail;
          errorEl.textContent = err.detail;
          errorEl.hidden = false;
        } else {
          throw err;
        }
      }
      this.render();
    });
  }

  private render(): void {
    this.renderStale();
    const cal = this.workspace.calibration;
    if (cal) {
      this.byId("calibration-panel").innerHTML = `
        <dl>
          <dt>C</dt><dd>${cal.params.C}</dd>
          <dt>gamma</dt><dd>${cal.params.gamma}</dd>
          <dt>type I error</dt><dd>${cal.summary.type_i_error.toFixed(4)}</dd>
          <dt>power</dt><dd>${cal.summary.power.toFixed(4)}</dd>
        </dl>`;
    }
    if (this.workspace.table) {
      this.byId("table-panel").textContent = this.workspace.table.csv;
    }
    if (this.workspace.oc) {
      this.byId("oc-panel").innerHTML = ocPanels(this.workspace.oc.report.reports);
    }
  }

  private exportCsv(): void {
    const text = this.workspace.exportTableCsv();
    const blob = new Blob([text], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${this.workspace.spec.name || "design"}_table.csv`;
    link.click();
    URL.revokeObjectURL(link.href);
  }
}
