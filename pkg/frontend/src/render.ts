import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";
import Papa from "papaparse";

export const SWEEP_HEADER = ["snr_db", "method", "payoff", "status"];

export interface SweepRow {
  snr_db: number;
  method: string;
  payoff: number;
  status: string;
}

export interface ParseResult {
  rows: SweepRow[];
  warnings: string[];
}

/** Parse the sweep CSV; rows whose status is not "ok" are dropped with a
 *  warning.  Throws on a wrong header or unparsable numbers. */
export function parseSweepCsv(text: string): ParseResult {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  if (fields.join(",") !== SWEEP_HEADER.join(",")) {
    throw new Error(
      `expected header "${SWEEP_HEADER.join(",")}", got "${fields.join(",")}"`,
    );
  }
  const rows: SweepRow[] = [];
  const warnings: string[] = [];
  parsed.data.forEach((rec, i) => {
    const snr = Number(rec.snr_db);
    const payoff = Number(rec.payoff);
    if (!Number.isFinite(snr) || !Number.isFinite(payoff)) {
      throw new Error(`row ${i + 1}: non-numeric snr_db or payoff`);
    }
    if (rec.status !== "ok") {
      warnings.push(
        `row ${i + 1}: status "${rec.status}" (${rec.method} at ${rec.snr_db} dB) excluded`,
      );
      return;
    }
    rows.push({ snr_db: snr, method: rec.method, payoff, status: rec.status });
  });
  if (rows.length === 0) {
    throw new Error("no usable rows (need at least one SNR point with status ok)");
  }
  return { rows, warnings };
}

/** Group rows into one series per method, in order of first appearance. */
export function groupByMethod(rows: SweepRow[]): Map<string, SweepRow[]> {
  const series = new Map<string, SweepRow[]>();
  for (const row of rows) {
    if (!series.has(row.method)) series.set(row.method, []);
    series.get(row.method)!.push(row);
  }
  return series;
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 24, right: 24, bottom: 48, left: 64 };
const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const best = candidates.find((s) => span / s <= n) ?? 10 * step;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / best) * best; t <= hi + 1e-12; t += best) {
    ticks.push(Number(t.toFixed(10)));
  }
  return ticks;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

/** Build the SVG document: one polyline and one legend entry per method.
 *  Payoff values are carried verbatim into each series' data-payoffs
 *  attribute so the chart can be audited against its source. */
export function buildSvg(
  rows: SweepRow[],
  title = "Expected payoff vs SNR",
): string {
  const series = groupByMethod(rows);
  const xs = rows.map((r) => r.snr_db);
  const ys = rows.map((r) => r.payoff);
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  const ylo = Math.min(...ys);
  const yhi = Math.max(...ys);
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) =>
    MARGIN.left + (xhi === xlo ? plotW / 2 : ((x - xlo) / (xhi - xlo)) * plotW);
  const sy = (y: number) =>
    MARGIN.top + plotH - (yhi === ylo ? plotH / 2 : ((y - ylo) / (yhi - ylo)) * plotH);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" font-family="sans-serif" font-size="12">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="16" text-anchor="middle" font-size="14">${esc(title)}</text>`,
  );
  for (const t of niceTicks(xlo, xhi)) {
    const px = sx(t);
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" stroke="#ddd"/>`,
      `<text x="${px}" y="${MARGIN.top + plotH + 16}" text-anchor="middle">${t}</text>`,
    );
  }
  for (const t of niceTicks(ylo, yhi)) {
    const py = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" stroke="#ddd"/>`,
      `<text x="${MARGIN.left - 8}" y="${py + 4}" text-anchor="end">${t}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 10}" text-anchor="middle">SNR (dB)</text>`,
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">Expected payoff</text>`,
  );

  let k = 0;
  for (const [method, pts] of series) {
    const color = COLORS[k % COLORS.length];
    const sorted = [...pts].sort((a, b) => a.snr_db - b.snr_db);
    const coords = sorted.map((p) => `${sx(p.snr_db)},${sy(p.payoff)}`).join(" ");
    const payoffs = sorted.map((p) => p.payoff).join(",");
    parts.push(
      `<polyline class="series" data-method="${esc(method)}" data-payoffs="${payoffs}" points="${coords}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
    for (const p of sorted) {
      parts.push(`<circle cx="${sx(p.snr_db)}" cy="${sy(p.payoff)}" r="2.5" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 10 + 16 * k;
    parts.push(
      `<line class="legend-swatch" x1="${WIDTH - MARGIN.right - 140}" y1="${ly}" x2="${WIDTH - MARGIN.right - 116}" y2="${ly}" stroke="${color}" stroke-width="1.5"/>`,
      `<text class="legend-label" x="${WIDTH - MARGIN.right - 110}" y="${ly + 4}">${esc(method)}</text>`,
    );
    k += 1;
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export interface RenderResult {
  warnings: string[];
  digest: string;
  sidecarPath: string;
}

/** Read the CSV, write the SVG chart, and write a <out>.src.sha256 sidecar
 *  holding the hex digest of the source CSV so the figure can be tied back
 *  to the exact data it presents. */
export function renderSweep(csvPath: string, outPath: string): RenderResult {
  const raw = readFileSync(csvPath);
  const { rows, warnings } = parseSweepCsv(raw.toString("utf8"));
  writeFileSync(outPath, buildSvg(rows));
  const digest = createHash("sha256").update(raw).digest("hex");
  const sidecarPath = `${outPath}.src.sha256`;
  writeFileSync(sidecarPath, `${digest}  ${csvPath}\n`);
  return { warnings, digest, sidecarPath };
}
