#!/usr/bin/env node
import { renderSweep } from "./render.js";

const args = process.argv.slice(2);
if (args.length !== 2) {
  console.error("usage: render-sweep <sweep.csv> <out.svg>");
  process.exit(1);
}

try {
  const { warnings, sidecarPath } = renderSweep(args[0], args[1]);
  for (const w of warnings) console.warn(`warning: ${w}`);
  console.log(`wrote ${args[1]} (source digest in ${sidecarPath})`);
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
}
