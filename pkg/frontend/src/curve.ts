/** Draw-mode curve math: monotone cubic interpolation on the control grid.
 *
 * The editor stores sparse (time, level) control points; synthesis wants a
 * dense curve at 250 Hz. Fritsch-Carlson tangents keep the interpolant
 * inside the hull of neighbouring points, and a final clamp guarantees the
 * backend never sees negative or non-finite levels.
 */

import { CONTROL_RATE, CurveEditState, CurvePoint } from "./types.js";

/** Sorted, deduplicated, clamped copy of the editor's points. */
export function normalizePoints(points: CurvePoint[]): CurvePoint[] {
  const cleaned = points
    .filter((p) => Number.isFinite(p.time) && Number.isFinite(p.level))
    .map((p) => ({ time: Math.max(0, p.time), level: Math.max(0, p.level) }))
    .sort((a, b) => a.time - b.time);
  const out: CurvePoint[] = [];
  for (const p of cleaned) {
    const last = out[out.length - 1];
    if (last && Math.abs(p.time - last.time) < 1e-9) {
      last.level = p.level; // later edit wins on duplicate times
    } else {
      out.push({ ...p });
    }
  }
  return out;
}

/** Fritsch-Carlson monotone tangents for cubic Hermite interpolation. */
function tangents(xs: number[], ys: number[]): number[] {
  const n = xs.length;
  const d: number[] = [];
  for (let i = 0; i < n - 1; i++) {
    d.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
  }
  const m: number[] = new Array(n).fill(0);
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (let i = 1; i < n - 1; i++) {
    m[i] = d[i - 1] * d[i] <= 0 ? 0 : (d[i - 1] + d[i]) / 2;
  }
  for (let i = 0; i < n - 1; i++) {
    if (d[i] === 0) {
      m[i] = 0;
      m[i + 1] = 0;
      continue;
    }
    const a = m[i] / d[i];
    const b = m[i + 1] / d[i];
    const s = a * a + b * b;
    if (s > 9) {
      const tau = 3 / Math.sqrt(s);
      m[i] = tau * a * d[i];
      m[i + 1] = tau * b * d[i];
    }
  }
  return m;
}

function hermite(
  x: number,
  x0: number,
  x1: number,
  y0: number,
  y1: number,
  m0: number,
  m1: number,
): number {
  const h = x1 - x0;
  const t = (x - x0) / h;
  const t2 = t * t;
  const t3 = t2 * t;
  return (
    (2 * t3 - 3 * t2 + 1) * y0 +
    (t3 - 2 * t2 + t) * h * m0 +
    (-2 * t3 + 3 * t2) * y1 +
    (t3 - t2) * h * m1
  );
}

/**
 * Sample the drawn curve on the 250 Hz grid over [0, duration).
 * Times outside the drawn range hold the nearest endpoint level.
 * Needs at least two control points.
 */
export function curveToControl(state: CurveEditState): number[] {
  const points = normalizePoints(state.points);
  if (points.length < 2) {
    throw new Error("draw mode needs at least two control points");
  }
  const xs = points.map((p) => p.time);
  const ys = points.map((p) => p.level);
  const m = tangents(xs, ys);
  const frames = Math.ceil(state.duration * CONTROL_RATE);
  const out = new Array<number>(frames);
  let seg = 0;
  for (let k = 0; k < frames; k++) {
    const t = k / CONTROL_RATE;
    let value: number;
    if (t <= xs[0]) {
      value = ys[0];
    } else if (t >= xs[xs.length - 1]) {
      value = ys[ys.length - 1];
    } else {
      while (xs[seg + 1] < t) seg++;
      value = hermite(t, xs[seg], xs[seg + 1], ys[seg], ys[seg + 1], m[seg], m[seg + 1]);
    }
    out[k] = Math.max(0, value);
  }
  return out;
}

/** Pearson correlation of two equal-length series. */
export function pearson(a: number[], b: number[]): number {
  const n = Math.min(a.length, b.length);
  if (n < 2) return 0;
  let ma = 0;
  let mb = 0;
  for (let i = 0; i < n; i++) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  let cov = 0;
  let va = 0;
  let vb = 0;
  for (let i = 0; i < n; i++) {
    const da = a[i] - ma;
    const db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va === 0 || vb === 0) return 0;
  return cov / Math.sqrt(va * vb);
}
