/**
 * Collects sculpt edits and releases them as at most one batch per frame
 * period, so a 60 Hz pointer never outruns the 30 Hz session.
 */

import type { Update } from "./protocol.js";

export const FRAME_PERIOD_MS = 1000 / 30;

export class SculptBatcher {
  private readonly periodMs: number;
  private readonly pending = new Map<number, number>();
  private lastFlushAt = Number.NEGATIVE_INFINITY;

  constructor(periodMs = FRAME_PERIOD_MS) {
    if (!(periodMs > 0)) throw new Error("period must be positive");
    this.periodMs = periodMs;
  }

  /** Stage one edit; later writes to the same rod win. */
  add(index: number, value: number): void {
    this.pending.set(index, value);
  }

  get dirty(): boolean {
    return this.pending.size > 0;
  }

  /**
   * Return the staged batch if a full period has passed since the last
   * flush, else null. Call freely at any rate; the period gate is here.
   */
  flushIfDue(now: number): Update[] | null {
    if (this.pending.size === 0) return null;
    // 1 ns grace so float crumbs in timer arithmetic cannot stall a flush
    if (now - this.lastFlushAt < this.periodMs - 1e-6) return null;
    this.lastFlushAt = now;
    const batch: Update[] = [];
    for (const [index, value] of this.pending) batch.push({ index, value });
    this.pending.clear();
    batch.sort((a, b) => a.index - b.index);
    return batch;
  }

  clear(): void {
    this.pending.clear();
  }
}
