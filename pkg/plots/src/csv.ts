// Timeseries CSV reader (the simulator's diagnostics log).

import { readFile } from "fs/promises";

export interface Timeseries {
  path: string;
  columns: Record<string, number[]>;
}

export async function readTimeseries(path: string): Promise<Timeseries> {
  const text = await readFile(path, "utf8");
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length < 2) throw new Error(`${path}: empty timeseries`);
  const names = lines[0].split(",");
  const columns: Record<string, number[]> = {};
  for (const n of names) columns[n] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== names.length) {
      throw new Error(`${path}: malformed row: ${line}`);
    }
    parts.forEach((p, j) => columns[names[j]].push(Number(p)));
  }
  return { path, columns };
}
