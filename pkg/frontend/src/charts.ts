// Hand-rolled SVG builders. Pure string producers so they are trivially
// testable; the pages inject the results with innerHTML.

import type { DecideResponse, OCReportJson, PatientEss } from "./types.js";

const DESIGN_COLORS: Record<string, string> = {
  simon: "#888888",
  ts: "#7a9e7e",
  bop2: "#5b7db1",
  tess: "#c0504d",
};

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface BarDatum {
  label: string;
  value: number;
  color?: string;
}

/** Simple vertical bar chart with labels; returns an <svg> string. */
export function barChart(data: BarDatum[], opts: { height?: number; maxValue?: number; format?: (v: number) => string } = {}): string {
  const height = opts.height ?? 160;
  const barWidth = 46;
  const gap = 18;
  const width = data.length * (barWidth + gap) + gap;
  const maxValue = opts.maxValue ?? Math.max(...data.map((d) => d.value), 1e-9);
  const fmt = opts.format ?? ((v: number) => v.toFixed(2));
  const parts: string[] = [
    `<svg viewBox="0 0 ${width} ${height + 36}" class="bar-chart" role="img">`,
  ];
  data.forEach((d, i) => {
    const h = maxValue > 0 ? (d.value / maxValue) * height : 0;
    const x = gap + i * (barWidth + gap);
    const y = height - h;
    const color = d.color ?? DESIGN_COLORS[d.label] ?? "#555555";
    parts.push(`<rect x="${x}" y="${y.toFixed(1)}" width="${barWidth}" height="${h.toFixed(1)}" fill="${color}"></rect>`);
    parts.push(`<text x="${x + barWidth / 2}" y="${(y - 4).toFixed(1)}" text-anchor="middle" class="bar-value">${esc(fmt(d.value))}</text>`);
    parts.push(`<text x="${x + barWidth / 2}" y="${height + 16}" text-anchor="middle" class="bar-label">${esc(d.label)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("");
}

/** One bar panel per metric across designs, mirroring the report columns. */
export function ocPanels(reports: OCReportJson[]): string {
  const metrics: { key: keyof OCReportJson; title: string; max?: number }[] = [
    { key: "accept_rate", title: "Pr(declared promising)", max: 1 },
    { key: "expected_n", title: "Expected sample size" },
    { key: "mean_duration_months", title: "Mean duration (months)" },
  ];
  const panels = metrics.map((m) => {
    const bars = reports.map((r) => ({ label: r.design, value: Number(r[m.key]) }));
    return `<figure><figcaption>${esc(m.title)}</figcaption>${barChart(bars, { maxValue: m.max })}</figure>`;
  });
  return panels.join("");
}

/**
 * Horizontal gauge of the live TESS against its go/no-go threshold.
 * The marker position and threshold tick are linear in [0, n_enrolled].
 */
export function tessGauge(tess: number, threshold: number | null, maxTess: number): string {
  const width = 320;
  const height = 46;
  const scale = (v: number) => (maxTess > 0 ? (Math.min(v, maxTess) / maxTess) * width : 0);
  const tessX = scale(tess);
  const parts = [
    `<svg viewBox="0 0 ${width} ${height}" class="tess-gauge" role="img">`,
    `<rect x="0" y="18" width="${width}" height="12" fill="#e3e3e3"></rect>`,
    `<rect x="0" y="18" width="${tessX.toFixed(1)}" height="12" fill="#5b7db1" data-role="tess-fill"></rect>`,
    `<text x="${tessX.toFixed(1)}" y="12" text-anchor="middle" class="gauge-value">TESS ${tess.toFixed(2)}</text>`,
  ];
  if (threshold !== null) {
    const thrX = scale(threshold);
    parts.push(`<line x1="${thrX.toFixed(1)}" y1="14" x2="${thrX.toFixed(1)}" y2="34" stroke="#c0504d" stroke-width="2" data-role="threshold-tick"></line>`);
    parts.push(`<text x="${thrX.toFixed(1)}" y="44" text-anchor="middle" class="gauge-threshold">${threshold.toFixed(2)}</text>`);
  }
  parts.push("</svg>");
  return parts.join("");
}

/** One slim bar per patient showing the fractional credit earned so far. */
export function essBars(patients: PatientEss[]): string {
  const barHeight = 10;
  const gap = 3;
  const width = 260;
  const height = patients.length * (barHeight + gap) + gap;
  const parts = [`<svg viewBox="0 0 ${width + 60} ${height}" class="ess-bars" role="img">`];
  patients.forEach((p, i) => {
    const y = gap + i * (barHeight + gap);
    const w = Math.max(0, Math.min(p.ess, 1)) * width;
    const color = p.status === "pending" ? "#b8860b" : "#5b7db1";
    parts.push(`<rect x="40" y="${y}" width="${w.toFixed(1)}" height="${barHeight}" fill="${color}" data-ess="${p.ess.toFixed(4)}"></rect>`);
    parts.push(`<text x="34" y="${y + barHeight - 1}" text-anchor="end" class="ess-id">${esc(p.id)}</text>`);
    parts.push(`<text x="${46 + w}" y="${y + barHeight - 1}" class="ess-value">${p.ess.toFixed(2)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("");
}

/** Banner class + message for a decision (or a blocking problem). */
export function bannerFor(decision: DecideResponse | null, error: string | null): { kind: string; text: string } {
  if (error) return { kind: "error", text: error };
  if (!decision) return { kind: "idle", text: "enter patient rows to evaluate" };
  const detail = decision.endpoints.map((e) => `${e.endpoint}: ${e.detail}`).join("; ");
  return { kind: decision.action.toLowerCase(), text: `${decision.action} - ${detail}` };
}
