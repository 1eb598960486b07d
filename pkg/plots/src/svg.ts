// Minimal deterministic SVG assembly: panels with axes, line series,
// contour segments, and an embedded provenance metadata block.

import { Segment } from "./contour.js";

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Mapping {
  box: Box;
  xLo: number;
  xHi: number;
  yLo: number;
  yHi: number;
}

const f = (v: number) => (Math.round(v * 100) / 100).toString();

export function mapX(m: Mapping, x: number): number {
  return m.box.x + ((x - m.xLo) / (m.xHi - m.xLo)) * m.box.w;
}

export function mapY(m: Mapping, y: number): number {
  return m.box.y + m.box.h - ((y - m.yLo) / (m.yHi - m.yLo)) * m.box.h;
}

export interface LineStyle {
  color: string;
  width: number;
  dash?: string;
}

export function polyline(m: Mapping, xs: number[], ys: number[],
                         style: LineStyle): string {
  const pts = xs.map((x, j) => `${f(mapX(m, x))},${f(mapY(m, ys[j]))}`).join(" ");
  const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
  return `<polyline fill="none" stroke="${style.color}" stroke-width="${style.width}"${dash} points="${pts}"/>`;
}

export function contourPaths(m: Mapping, segs: Segment[], style: LineStyle): string {
  if (segs.length === 0) return "";
  const d = segs
    .map((s) => `M${f(mapX(m, s.x1))} ${f(mapY(m, s.y1))}L${f(mapX(m, s.x2))} ${f(mapY(m, s.y2))}`)
    .join("");
  const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
  return `<path fill="none" stroke="${style.color}" stroke-width="${style.width}"${dash} d="${d}"/>`;
}

export function axes(m: Mapping, xLabel: string, yLabel: string, title: string): string {
  const b = m.box;
  const parts = [
    `<rect x="${f(b.x)}" y="${f(b.y)}" width="${f(b.w)}" height="${f(b.h)}" fill="none" stroke="black" stroke-width="1"/>`,
    `<text x="${f(b.x + b.w / 2)}" y="${f(b.y + b.h + 28)}" text-anchor="middle" font-size="11">${xLabel}</text>`,
    `<text x="${f(b.x - 34)}" y="${f(b.y + b.h / 2)}" text-anchor="middle" font-size="11" transform="rotate(-90 ${f(b.x - 34)} ${f(b.y + b.h / 2)})">${yLabel}</text>`,
    `<text x="${f(b.x + b.w / 2)}" y="${f(b.y - 6)}" text-anchor="middle" font-size="12">${title}</text>`,
  ];
  // four tick labels per axis
  for (let j = 0; j <= 3; j++) {
    const xv = m.xLo + (j / 3) * (m.xHi - m.xLo);
    const yv = m.yLo + (j / 3) * (m.yHi - m.yLo);
    parts.push(
      `<text x="${f(mapX(m, xv))}" y="${f(b.y + b.h + 14)}" text-anchor="middle" font-size="9">${formatTick(xv)}</text>`,
      `<text x="${f(b.x - 4)}" y="${f(mapY(m, yv) + 3)}" text-anchor="end" font-size="9">${formatTick(yv)}</text>`,
    );
  }
  return parts.join("\n");
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(1);
  return (Math.round(v * 1000) / 1000).toString();
}

export function legend(x: number, y: number,
                       entries: { label: string; style: LineStyle }[]): string {
  return entries
    .map((e, j) => {
      const yy = y + 16 * j;
      const dash = e.style.dash ? ` stroke-dasharray="${e.style.dash}"` : "";
      return (
        `<line x1="${f(x)}" y1="${f(yy)}" x2="${f(x + 30)}" y2="${f(yy)}" stroke="${e.style.color}" stroke-width="${e.style.width}"${dash}/>` +
        `<text x="${f(x + 36)}" y="${f(yy + 4)}" font-size="11">${e.label}</text>`
      );
    })
    .join("\n");
}

export interface Provenance {
  kind: string;
  inputs: { path: string; sha256: string; config_hash?: string }[];
  days?: number[];
  levels?: number[];
}

export function document(width: number, height: number, body: string,
                         prov: Provenance): string {
  const meta = JSON.stringify(prov);
  return [
    `<?xml version="1.0" encoding="UTF-8"?>`,
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<metadata id="provenance">${escapeXml(meta)}</metadata>`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    body,
    `</svg>`,
    ``,
  ].join("\n");
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
