// Marching-squares contour extraction on a rectilinear lattice of samples.
// Emits raw line segments per level; the renderer draws them directly, so
// no segment joining is needed.

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

/**
 * Contour `field[i][k]` sampled at coordinates xs[i], zs[k].
 * Returns one segment list per requested level.
 */
export function marchingSquares(
  field: number[][],
  xs: number[],
  zs: number[],
  levels: number[],
): Segment[][] {
  const nx = field.length;
  const nz = field[0].length;
  const out: Segment[][] = levels.map(() => []);

  for (let li = 0; li < levels.length; li++) {
    const c = levels[li];
    const segs = out[li];
    for (let i = 0; i < nx - 1; i++) {
      for (let k = 0; k < nz - 1; k++) {
        // corner values, counterclockwise from bottom-left
        const v00 = field[i][k];
        const v10 = field[i + 1][k];
        const v11 = field[i + 1][k + 1];
        const v01 = field[i][k + 1];
        let idx = 0;
        if (v00 > c) idx |= 1;
        if (v10 > c) idx |= 2;
        if (v11 > c) idx |= 4;
        if (v01 > c) idx |= 8;
        if (idx === 0 || idx === 15) continue;

        const x0 = xs[i];
        const x1 = xs[i + 1];
        const z0 = zs[k];
        const z1 = zs[k + 1];
        const frac = (a: number, b: number) => (c - a) / (b - a);
        // edge crossing points (bottom, right, top, left)
        const pb = () => [x0 + frac(v00, v10) * (x1 - x0), z0] as const;
        const pr = () => [x1, z0 + frac(v10, v11) * (z1 - z0)] as const;
        const pt = () => [x0 + frac(v01, v11) * (x1 - x0), z1] as const;
        const pl = () => [x0, z0 + frac(v00, v01) * (z1 - z0)] as const;

        const add = (p: readonly [number, number], q: readonly [number, number]) =>
          segs.push({ x1: p[0], y1: p[1], x2: q[0], y2: q[1] });

        switch (idx) {
          case 1: case 14: add(pl(), pb()); break;
          case 2: case 13: add(pb(), pr()); break;
          case 3: case 12: add(pl(), pr()); break;
          case 4: case 11: add(pr(), pt()); break;
          case 6: case 9:  add(pb(), pt()); break;
          case 7: case 8:  add(pl(), pt()); break;
          case 5:  add(pl(), pb()); add(pr(), pt()); break;
          case 10: add(pb(), pr()); add(pl(), pt()); break;
        }
      }
    }
  }
  return out;
}

/** Symmetric-about-zero levels covering [-m, m], excluding zero. */
export function symmetricLevels(maxAbs: number, nPerSide: number): number[] {
  if (maxAbs <= 0) return [];
  const step = maxAbs / nPerSide;
  const levels: number[] = [];
  for (let j = nPerSide; j >= 1; j--) levels.push(-j * step);
  for (let j = 1; j <= nPerSide; j++) levels.push(j * step);
  return levels;
}

/** Evenly spaced levels strictly inside [lo, hi]. */
export function linearLevels(lo: number, hi: number, n: number): number[] {
  if (!(hi > lo)) return [];
  const step = (hi - lo) / (n + 1);
  return Array.from({ length: n }, (_, j) => lo + (j + 1) * step);
}
