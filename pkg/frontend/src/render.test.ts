import { createHash } from "node:crypto";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { buildSvg, groupByMethod, parseSweepCsv, renderSweep } from "./render.js";

const METHODS = ["costless", "noncausal", "causal", "full_power"];

function sweepCsv(snrs: number[], methods = METHODS, status = "ok"): string {
  const lines = ["snr_db,method,payoff,status"];
  for (const snr of snrs) {
    for (const m of methods) {
      lines.push(`${snr},${m},${(snr + methods.indexOf(m) * 0.25).toFixed(6)},${status}`);
    }
  }
  return lines.join("\n") + "\n";
}

const snrs11 = Array.from({ length: 11 }, (_, i) => i);

describe("parseSweepCsv", () => {
  it("accepts the exact header and keeps all ok rows", () => {
    const { rows, warnings } = parseSweepCsv(sweepCsv(snrs11));
    expect(rows).toHaveLength(44);
    expect(warnings).toHaveLength(0);
  });

  it("rejects a wrong header", () => {
    expect(() => parseSweepCsv("snr,method,payoff,status\n0,a,1,ok\n")).toThrow(
      /expected header/,
    );
  });

  it("rejects non-numeric payoff", () => {
    expect(() =>
      parseSweepCsv("snr_db,method,payoff,status\n0,a,oops,ok\n"),
    ).toThrow(/non-numeric/);
  });

  it("drops non-ok rows with a warning", () => {
    const csv =
      "snr_db,method,payoff,status\n" +
      "0,causal,1.0,ok\n" +
      "0,noncausal,2.0,failed\n";
    const { rows, warnings } = parseSweepCsv(csv);
    expect(rows).toHaveLength(1);
    expect(warnings).toHaveLength(1);
    expect(warnings[0]).toMatch(/noncausal/);
  });

  it("rejects an empty table", () => {
    expect(() => parseSweepCsv("snr_db,method,payoff,status\n")).toThrow(
      /no usable rows/,
    );
  });
});

describe("buildSvg", () => {
  it("draws one polyline and one legend entry per method", () => {
    const { rows } = parseSweepCsv(sweepCsv(snrs11));
    const svg = buildSvg(rows);
    expect(svg.match(/<polyline class="series"/g)).toHaveLength(4);
    expect(svg.match(/class="legend-label"/g)).toHaveLength(4);
    for (const m of METHODS) expect(svg).toContain(`data-method="${m}"`);
    // 11 points per series
    for (const match of svg.matchAll(/points="([^"]+)"/g)) {
      expect(match[1].split(" ")).toHaveLength(11);
    }
    expect(svg.match(/<circle /g)).toHaveLength(44);
  });

  it("handles a single-method single-point table", () => {
    const { rows } = parseSweepCsv("snr_db,method,payoff,status\n5,causal,1.5,ok\n");
    const svg = buildSvg(rows);
    expect(svg.match(/<polyline class="series"/g)).toHaveLength(1);
    expect(svg).toContain('data-method="causal"');
  });

  it("carries payoff values verbatim in data-payoffs", () => {
    const { rows } = parseSweepCsv(sweepCsv([0, 5, 10], ["causal"]));
    const svg = buildSvg(rows);
    const m = svg.match(/data-payoffs="([^"]+)"/);
    expect(m![1]).toBe("0,5,10");
  });

  it("orders points by snr_db even if rows are shuffled", () => {
    const csv =
      "snr_db,method,payoff,status\n" +
      "10,causal,3,ok\n0,causal,1,ok\n5,causal,2,ok\n";
    const svg = buildSvg(parseSweepCsv(csv).rows);
    expect(svg.match(/data-payoffs="([^"]+)"/)![1]).toBe("1,2,3");
  });
});

describe("renderSweep", () => {
  it("writes the SVG and a sha256 sidecar of the source CSV", () => {
    const dir = mkdtempSync(join(tmpdir(), "sweep-"));
    const csvPath = join(dir, "sweep.csv");
    const outPath = join(dir, "sweep.svg");
    const csv = sweepCsv(snrs11);
    writeFileSync(csvPath, csv);
    const { digest, sidecarPath } = renderSweep(csvPath, outPath);
    expect(readFileSync(outPath, "utf8")).toContain("</svg>");
    expect(digest).toBe(createHash("sha256").update(csv).digest("hex"));
    expect(readFileSync(sidecarPath, "utf8")).toContain(digest);
    expect(sidecarPath).toBe(`${outPath}.src.sha256`);
  });
});
