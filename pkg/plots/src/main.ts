#!/usr/bin/env node
// CLI: plot --kind K --in DIR [--in2 DIR] --days 2,4,7,11 --out FILE
//            [--levels v1,v2,...]

import { writeFile } from "fs/promises";

import { FigureError, FigureSpec, renderFigure } from "./figures.js";

const KINDS = ["v-contours", "theta-contours", "rmsv", "energy", "compare"];

function usage(): string {
  return [
    "usage: eadyslice-plot --kind KIND --in DIR [--in2 DIR]",
    "                      [--days 2,4,7,11] [--levels a,b,c] --out FILE.svg",
    `kinds: ${KINDS.join(", ")}`,
  ].join("\n");
}

function parseArgs(argv: string[]): FigureSpec {
  const opts: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new FigureError(`bad argument ${key}\n${usage()}`);
    }
    opts[key.slice(2)] = argv[i + 1];
  }
  for (const required of ["kind", "in", "out"]) {
    if (!(required in opts)) {
      throw new FigureError(`missing --${required}\n${usage()}`);
    }
  }
  if (!KINDS.includes(opts["kind"])) {
    throw new FigureError(`unknown kind ${opts["kind"]}; allowed: ${KINDS.join(", ")}`);
  }
  const days = (opts["days"] ?? "")
    .split(",")
    .filter((s) => s.length > 0)
    .map(Number);
  if (days.some((d) => Number.isNaN(d))) {
    throw new FigureError(`bad --days list: ${opts["days"]}`);
  }
  const levels = (opts["levels"] ?? "")
    .split(",")
    .filter((s) => s.length > 0)
    .map(Number);
  return {
    kind: opts["kind"] as FigureSpec["kind"],
    inDir: opts["in"],
    inDir2: opts["in2"],
    days,
    levels: levels.length > 0 ? levels : undefined,
    outPath: opts["out"],
  };
}

export async function main(argv: string[]): Promise<number> {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    const body = await renderFigure(spec);
    await writeFile(spec.outPath, body, "utf8");
    console.log(`wrote ${spec.outPath}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const isDirectRun = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
