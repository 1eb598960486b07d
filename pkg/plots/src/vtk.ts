// Reader for the simulator's legacy-ASCII VTK snapshots.
//
// Only the FIELD block is consumed: it carries the native staggered arrays
// (x-fastest flattening) plus the model time, which is everything a figure
// needs. The plot tool never recomputes physics.

import { readFile } from "fs/promises";

export interface Snapshot {
  path: string;
  timeSeconds: number;
  day: number;
  nx: number;
  nz: number;
  configHash: string;
  /** cell-center fields indexed [i][k] */
  v: number[][];
  thetaS: number[][];
}

function reshapeXFastest(flat: number[], nx: number, nz: number): number[][] {
  const out: number[][] = [];
  for (let i = 0; i < nx; i++) {
    const col: number[] = new Array(nz);
    for (let k = 0; k < nz; k++) col[k] = flat[k * nx + i];
    out.push(col);
  }
  return out;
}

export async function readSnapshot(path: string): Promise<Snapshot> {
  const text = await readFile(path, "utf8");
  const lines = blankless(text);
  const header = lines[1] ?? "";
  const hashMatch = header.match(/config=([0-9a-f]*)/);

  const tokens = text.split(/\s+/).filter((t) => t.length > 0);
  const dimAt = tokens.indexOf("DIMENSIONS");
  if (dimAt < 0) throw new Error(`${path}: no DIMENSIONS record`);
  const nx = parseInt(tokens[dimAt + 1], 10) - 1;
  const nz = parseInt(tokens[dimAt + 2], 10) - 1;

  const fieldAt = tokens.indexOf("FIELD");
  if (fieldAt < 0) throw new Error(`${path}: no FIELD block`);
  const nArrays = parseInt(tokens[fieldAt + 2], 10);
  let pos = fieldAt + 3;
  const arrays: Record<string, number[]> = {};
  for (let a = 0; a < nArrays; a++) {
    const name = tokens[pos];
    const count = parseInt(tokens[pos + 2], 10);
    const data: number[] = new Array(count);
    for (let j = 0; j < count; j++) data[j] = Number(tokens[pos + 4 + j]);
    arrays[name] = data;
    pos += 4 + count;
  }
  for (const required of ["time", "v", "theta_S"]) {
    if (!(required in arrays)) throw new Error(`${path}: missing field ${required}`);
  }

  const t = arrays["time"][0];
  return {
    path,
    timeSeconds: t,
    day: t / 86400.0,
    nx,
    nz,
    configHash: hashMatch ? hashMatch[1] : "",
    v: reshapeXFastest(arrays["v"], nx, nz),
    thetaS: reshapeXFastest(arrays["theta_S"], nx, nz),
  };
}

function blankless(text: string): string[] {
  return text.split("\n");
}

/** Map day numbers to snapshot files named snap_DDDD.DDD.vtk in a directory. */
export function snapshotName(day: number): string {
  return `snap_${day.toFixed(3).padStart(8, "0")}.vtk`;
}
