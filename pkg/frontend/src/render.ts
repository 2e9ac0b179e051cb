/**
 * Heightmap drawing. Depth is shown two ways at once: cell fill intensity
 * and the extent of an inner plate that grows with the count, keeping the
 * surface readable at a glance without any 3-D machinery.
 */

import { MAX_COUNT } from "./protocol.js";
import { ROWS, COLS } from "./pointer.js";
import type { ViewState } from "./viewState.js";

export interface CellVisual {
  /** 0 for an untouched rod, 1 for full depth. */
  intensity: number;
  /** Side of the inner plate as a fraction of the cell, 0 when flat. */
  extent: number;
}

export function cellVisual(value: number): CellVisual {
  if (!Number.isFinite(value)) throw new Error("value must be finite");
  const t = Math.min(1, Math.max(0, value / MAX_COUNT));
  return {
    intensity: t,
    extent: t === 0 ? 0 : 0.35 + 0.6 * t,
  };
}

export function cellColor(value: number): string {
  const t = cellVisual(value).intensity;
  const hue = 210 - 30 * t;
  const light = 18 + 52 * t;
  return `hsl(${hue} 85% ${light}%)`;
}

export interface PaintOptions {
  pendingOutline?: string;
  background?: string;
  gridLine?: string;
}

/** Draw the whole grid from the view state. Pure consumer; mutates nothing. */
export function paintGrid(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  width: number,
  height: number,
  opts: PaintOptions = {},
): void {
  const cw = width / COLS;
  const ch = height / ROWS;
  ctx.fillStyle = opts.background ?? "#10151c";
  ctx.fillRect(0, 0, width, height);
  for (let row = 0; row < ROWS; row++) {
    for (let col = 0; col < COLS; col++) {
      const index = row * COLS + col;
      const value = view.positions[index] ?? 0;
      const vis = cellVisual(value);
      const x = col * cw;
      const y = row * ch;
      if (vis.extent > 0) {
        const side = vis.extent * Math.min(cw, ch);
        ctx.fillStyle = cellColor(value);
        ctx.fillRect(x + (cw - side) / 2, y + (ch - side) / 2, side, side);
      }
      ctx.strokeStyle = opts.gridLine ?? "rgba(255,255,255,0.08)";
      ctx.strokeRect(x + 0.5, y + 0.5, cw - 1, ch - 1);
      if (view.pendingEdits.has(index)) {
        ctx.strokeStyle = opts.pendingOutline ?? "#ffd166";
        ctx.lineWidth = 2;
        ctx.strokeRect(x + 2, y + 2, cw - 4, ch - 4);
        ctx.lineWidth = 1;
      }
    }
  }
  if (!view.connection.connected) {
    ctx.fillStyle = "rgba(16, 21, 28, 0.72)";
    ctx.fillRect(0, 0, width, height);
  }
}
