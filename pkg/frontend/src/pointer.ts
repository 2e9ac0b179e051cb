/**
 * Pointer-to-rod geometry. The grid is row-major: index = row * 12 + col,
 * so a sweep across row 3 touches indices 36..47.
 */

import { MAX_COUNT, type Update } from "./protocol.js";

export const ROWS = 12;
export const COLS = 12;

export interface CellHit {
  row: number;
  col: number;
  index: number;
  /** Rod value from the pointer's height inside the cell: top 0, bottom 127. */
  value: number;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/**
 * Map a pointer position inside a width x height surface to a cell and a
 * depth. Vertical position within the cell sets the value proportionally,
 * so dragging to a cell's bottom edge reaches full depth 127.
 */
export function hitCell(x: number, y: number, width: number, height: number): CellHit {
  if (!(width > 0) || !(height > 0)) throw new Error("surface size must be positive");
  const col = clamp(Math.floor((x / width) * COLS), 0, COLS - 1);
  const row = clamp(Math.floor((y / height) * ROWS), 0, ROWS - 1);
  const cellH = height / ROWS;
  const frac = clamp((y - row * cellH) / cellH, 0, 1);
  return {
    row,
    col,
    index: row * COLS + col,
    value: Math.round(frac * MAX_COUNT),
  };
}

/**
 * Expand one edit into a brush stamp with linear falloff over Euclidean
 * cell distance. Radius 0 is a single rod. A single pointer cannot mimic
 * several fingers at once; the brush is the stand-in for open-palm play.
 */
export function brushUpdates(index: number, value: number, radius: number): Update[] {
  if (!Number.isInteger(radius) || radius < 0) throw new Error("radius must be a non-negative integer");
  const row = Math.floor(index / COLS);
  const col = index % COLS;
  const out: Update[] = [];
  for (let dr = -radius; dr <= radius; dr++) {
    for (let dc = -radius; dc <= radius; dc++) {
      const r = row + dr;
      const c = col + dc;
      if (r < 0 || r >= ROWS || c < 0 || c >= COLS) continue;
      const dist = Math.hypot(dr, dc);
      const weight = 1 - dist / (radius + 1);
      if (weight <= 0) continue;
      out.push({ index: r * COLS + c, value: Math.round(value * weight) });
    }
  }
  out.sort((a, b) => a.index - b.index);
  return out;
}
