// The five figure kinds. Every number plotted is read from run outputs;
// nothing is recomputed. Each SVG embeds the sha256 of its inputs and the
// run config hashes in a <metadata> block for provenance checks.

import { createHash } from "crypto";
import { readFile } from "fs/promises";
import path from "path";

import { readTimeseries } from "./csv.js";
import { linearLevels, marchingSquares, Segment, symmetricLevels } from "./contour.js";
import * as svg from "./svg.js";
import { readSnapshot, Snapshot, snapshotName } from "./vtk.js";

export interface FigureSpec {
  kind: "v-contours" | "theta-contours" | "rmsv" | "energy" | "compare";
  inDir: string;
  inDir2?: string;
  days: number[];
  levels?: number[];
  outPath: string;
}

export class FigureError extends Error {}

async function sha256(file: string): Promise<string> {
  const buf = await readFile(file);
  return createHash("sha256").update(buf).digest("hex");
}

async function loadSnapshots(dir: string, days: number[]): Promise<Snapshot[]> {
  const snaps: Snapshot[] = [];
  for (const day of days) {
    const file = path.join(dir, snapshotName(day));
    let snap: Snapshot;
    try {
      snap = await readSnapshot(file);
    } catch (err) {
      throw new FigureError(`day ${day} not available in ${dir}: ${err}`);
    }
    snaps.push(snap);
  }
  const hashes = new Set(snaps.map((s) => s.configHash));
  if (hashes.size > 1) {
    throw new FigureError(
      `snapshots in ${dir} carry mixed config hashes: ${[...hashes].join(", ")}`);
  }
  return snaps;
}

async function provenanceFor(files: { path: string; config_hash?: string }[],
                             kind: string, days?: number[],
                             levels?: number[]): Promise<svg.Provenance> {
  const inputs = [];
  for (const f of files) {
    inputs.push({ path: f.path, sha256: await sha256(f.path),
                  config_hash: f.config_hash });
  }
  return { kind, inputs, days, levels };
}

// grid coordinates recovered from counts only; figures use normalized axes
function cellCenters(n: number, lo: number, hi: number): number[] {
  const d = (hi - lo) / n;
  return Array.from({ length: n }, (_, i) => lo + (i + 0.5) * d);
}

const PANEL_W = 280;
const PANEL_H = 180;
const MARGIN = 56;
const GAP_X = 40;
const GAP_Y = 56;

function panelBox(row: number, col: number): svg.Box {
  return {
    x: MARGIN + col * (PANEL_W + GAP_X),
    y: MARGIN + row * (PANEL_H + GAP_Y),
    w: PANEL_W,
    h: PANEL_H,
  };
}

function contourPanel(snap: Snapshot, field: number[][], levels: number[],
                      box: svg.Box, title: string): string {
  const xs = cellCenters(snap.nx, -1, 1);       // x / L
  const zs = cellCenters(snap.nz, 0, 1);        // z / H
  const m: svg.Mapping = { box, xLo: -1, xHi: 1, yLo: 0, yHi: 1 };
  const perLevel = marchingSquares(field, xs, zs, levels);
  const parts: string[] = [svg.axes(m, "x / L", "z / H", title)];
  perLevel.forEach((segs: Segment[], li: number) => {
    const negative = levels[li] < 0;
    parts.push(svg.contourPaths(m, segs, {
      color: "black", width: 0.8, dash: negative ? "4 3" : undefined,
    }));
  });
  return parts.join("\n");
}

function fieldStats(snaps: Snapshot[], pick: (s: Snapshot) => number[][]) {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of snaps) {
    for (const col of pick(s)) {
      for (const value of col) {
        lo = Math.min(lo, value);
        hi = Math.max(hi, value);
      }
    }
  }
  return { lo, hi, maxAbs: Math.max(Math.abs(lo), Math.abs(hi)) };
}

async function contourFigure(spec: FigureSpec, field: "v" | "theta_S"):
    Promise<string> {
  if (spec.days.length === 0) throw new FigureError("no days requested");
  const snaps = await loadSnapshots(spec.inDir, spec.days);
  const pick = (s: Snapshot) => (field === "v" ? s.v : s.thetaS);
  let levels = spec.levels;
  if (!levels || levels.length === 0) {
    const stats = fieldStats(snaps, pick);
    // v levels symmetric about 0; theta levels span the observed range
    levels = field === "v"
      ? symmetricLevels(stats.maxAbs, 8)
      : linearLevels(stats.lo, stats.hi, 12);
  }
  const cols = Math.min(2, snaps.length);
  const rows = Math.ceil(snaps.length / cols);
  const body: string[] = [];
  snaps.forEach((snap, j) => {
    const title = `${field === "v" ? "v" : "theta_S"} at day ${snap.day.toFixed(2)}`;
    body.push(contourPanel(snap, pick(snap), levels!,
                           panelBox(Math.floor(j / cols), j % cols), title));
  });
  const prov = await provenanceFor(
    snaps.map((s) => ({ path: s.path, config_hash: s.configHash })),
    spec.kind, spec.days, levels);
  const width = MARGIN * 2 + cols * PANEL_W + (cols - 1) * GAP_X;
  const height = MARGIN * 2 + rows * PANEL_H + (rows - 1) * GAP_Y;
  return svg.document(width, height, body.join("\n"), prov);
}

const CONTROL_STYLE: svg.LineStyle = { color: "black", width: 1.5 };
const HIGHRES_STYLE: svg.LineStyle = { color: "red", width: 1.5 };

async function rmsvFigure(spec: FigureSpec): Promise<string> {
  const first = await readTimeseries(path.join(spec.inDir, "timeseries.csv"));
  const series = [{ ts: first, style: CONTROL_STYLE, label: "control" }];
  if (spec.inDir2) {
    const second = await readTimeseries(path.join(spec.inDir2, "timeseries.csv"));
    series.push({ ts: second, style: HIGHRES_STYLE, label: "high-resolution" });
  }
  const box = panelBox(0, 0);
  box.w = 2 * PANEL_W;
  let tHi = 0;
  let vHi = 0;
  for (const s of series) {
    tHi = Math.max(tHi, ...s.ts.columns["t"].map((t) => t / 86400));
    vHi = Math.max(vHi, ...s.ts.columns["rmsv"]);
  }
  const m: svg.Mapping = { box, xLo: 0, xHi: tHi, yLo: 0, yHi: 1.05 * vHi };
  const body = [
    svg.axes(m, "day", "rmsv [m/s]", "root mean square of v"),
    ...series.map((s) =>
      svg.polyline(m, s.ts.columns["t"].map((t) => t / 86400),
                   s.ts.columns["rmsv"], s.style)),
    svg.legend(box.x + 10, box.y + 16,
               series.map((s) => ({ label: s.label, style: s.style }))),
  ];
  const prov = await provenanceFor(series.map((s) => ({ path: s.ts.path })),
                                   spec.kind);
  return svg.document(box.w + 2 * MARGIN, box.h + 2 * MARGIN,
                      body.join("\n"), prov);
}

// line conventions: total thick, K_u dotted, K_v solid, P dot-dashed
function energyStyles(color: string): { key: string; label: string; style: svg.LineStyle }[] {
  return [
    { key: "E", label: "E", style: { color, width: 2.5 } },
    { key: "K_u", label: "K_u", style: { color, width: 1, dash: "2 3" } },
    { key: "K_v", label: "K_v", style: { color, width: 1 } },
    { key: "P", label: "P", style: { color, width: 1, dash: "8 3 2 3" } },
  ];
}

async function energyFigure(spec: FigureSpec): Promise<string> {
  const runs = [{ dir: spec.inDir, color: "black" }];
  if (spec.inDir2) runs.push({ dir: spec.inDir2, color: "red" });
  const loaded = [];
  for (const r of runs) {
    loaded.push({ ...r, ts: await readTimeseries(path.join(r.dir, "timeseries.csv")) });
  }
  const box = panelBox(0, 0);
  box.w = 2 * PANEL_W;
  let tHi = 0;
  let lo = Infinity;
  let hi = -Infinity;
  for (const r of loaded) {
    tHi = Math.max(tHi, ...r.ts.columns["t"].map((t) => t / 86400));
    for (const { key } of energyStyles("black")) {
      lo = Math.min(lo, ...r.ts.columns[key]);
      hi = Math.max(hi, ...r.ts.columns[key]);
    }
  }
  const pad = 0.05 * (hi - lo);
  const m: svg.Mapping = { box, xLo: 0, xHi: tHi, yLo: lo - pad, yHi: hi + pad };
  const body: string[] = [svg.axes(m, "day", "energy [J/m]", "energy evolution")];
  for (const r of loaded) {
    for (const { key, style } of energyStyles(r.color)) {
      body.push(svg.polyline(m, r.ts.columns["t"].map((t) => t / 86400),
                             r.ts.columns[key], style));
    }
  }
  body.push(svg.legend(box.x + 10, box.y + 16, energyStyles("black").map(
    (e) => ({ label: e.label, style: e.style }))));
  const prov = await provenanceFor(loaded.map((r) => ({ path: r.ts.path })),
                                   spec.kind);
  return svg.document(box.w + 2 * MARGIN, box.h + 2 * MARGIN,
                      body.join("\n"), prov);
}

async function compareFigure(spec: FigureSpec): Promise<string> {
  const day = spec.days.length > 0 ? spec.days[0] : 6.0;
  const forms = ["advective", "vector-invariant"];
  const rows: Snapshot[] = [];
  for (const form of forms) {
    rows.push((await loadSnapshots(path.join(spec.inDir, form), [day]))[0]);
  }
  const vStats = fieldStats(rows, (s) => s.v);
  const thStats = fieldStats(rows, (s) => s.thetaS);
  const vLevels = spec.levels && spec.levels.length > 0
    ? spec.levels : symmetricLevels(vStats.maxAbs, 8);
  const thLevels = linearLevels(thStats.lo, thStats.hi, 12);
  const body: string[] = [];
  rows.forEach((snap, r) => {
    body.push(contourPanel(snap, snap.v, vLevels, panelBox(r, 0),
                           `${forms[r]}: v at day ${snap.day.toFixed(2)}`));
    body.push(contourPanel(snap, snap.thetaS, thLevels, panelBox(r, 1),
                           `${forms[r]}: theta_S at day ${snap.day.toFixed(2)}`));
  });
  const prov = await provenanceFor(
    rows.map((s) => ({ path: s.path, config_hash: s.configHash })),
    spec.kind, [day], vLevels);
  const width = MARGIN * 2 + 2 * PANEL_W + GAP_X;
  const height = MARGIN * 2 + 2 * PANEL_H + GAP_Y;
  return svg.document(width, height, body.join("\n"), prov);
}

export async function renderFigure(spec: FigureSpec): Promise<string> {
  switch (spec.kind) {
    case "v-contours":
      return contourFigure(spec, "v");
    case "theta-contours":
      return contourFigure(spec, "theta_S");
    case "rmsv":
      return rmsvFigure(spec);
    case "energy":
      return energyFigure(spec);
    case "compare":
      return compareFigure(spec);
    default:
      throw new FigureError(`unknown figure kind ${(spec as FigureSpec).kind}`);
  }
}
