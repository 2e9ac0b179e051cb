/**
 * The single mutable state behind the panel. Socket handlers write it,
 * the render loop reads it; nothing else crosses between the two.
 */

import { GRID_SIZE, SEQ_MOD, seqAfter, type FrameMessage } from "./protocol.js";

export interface PendingEdit {
  index: number;
  value: number;
  /** Last seq seen when the sculpt batch went out; null if sent before any frame. */
  sentSeq: number | null;
  sentAt: number;
}

export interface ConnectionInfo {
  connected: boolean;
  lastSeq: number | null;
  fpsEstimate: number | null;
}

export interface ViewState {
  /** Rod counts from the latest server frame. Never locally predicted. */
  positions: number[];
  /** In-flight sculpt edits awaiting a frame newer than their send time. */
  pendingEdits: Map<number, PendingEdit>;
  /** Last server-acknowledged mode. */
  mode: string | null;
  lastError: string | null;
  connection: ConnectionInfo;
  droppedWhileDisconnected: number;
}

export function initialViewState(): ViewState {
  return {
    positions: new Array(GRID_SIZE).fill(0),
    pendingEdits: new Map(),
    mode: null,
    lastError: null,
    connection: { connected: false, lastSeq: null, fpsEstimate: null },
    droppedWhileDisconnected: 0,
  };
}

/** Frame-rate estimate over a short sliding window of arrival times. */
export class FpsEstimator {
  private readonly windowMs: number;
  private readonly times: number[] = [];

  constructor(windowMs = 2000) {
    this.windowMs = windowMs;
  }

  note(now: number): void {
    this.times.push(now);
    const cutoff = now - this.windowMs;
    while (this.times.length > 0 && (this.times[0] as number) < cutoff) {
      this.times.shift();
    }
  }

  estimate(): number | null {
    const n = this.times.length;
    if (n < 2) return null;
    const span = (this.times[n - 1] as number) - (this.times[0] as number);
    if (span <= 0) return null;
    return ((n - 1) * 1000) / span;
  }

  reset(): void {
    this.times.length = 0;
  }
}

/**
 * Fold one server frame into the view. Positions are replaced wholesale
 * (the server is authoritative) and any pending edit already covered by a
 * newer frame is retired, so highlights never outlive their acknowledgment.
 */
export function applyFrame(view: ViewState, frame: FrameMessage, fps: FpsEstimator, now: number): void {
  view.positions = frame.positions;
  view.connection.lastSeq = frame.seq;
  fps.note(now);
  view.connection.fpsEstimate = fps.estimate();
  for (const [index, edit] of view.pendingEdits) {
    if (edit.sentSeq === null || seqAfter(frame.seq, edit.sentSeq)) {
      view.pendingEdits.delete(index);
    }
  }
}

export function applyModeAck(view: ViewState, name: string): void {
  view.mode = name;
  view.lastError = null;
}

export function applyError(view: ViewState, reason: string): void {
  view.lastError = reason;
}

export function applyDisconnect(view: ViewState, fps: FpsEstimator): void {
  view.connection.connected = false;
  view.connection.fpsEstimate = null;
  view.pendingEdits.clear();
  fps.reset();
}

/** Record edits as pending (highlight only; heights stay server-owned). */
export function notePending(view: ViewState, updates: { index: number; value: number }[], now: number): void {
  for (const u of updates) {
    view.pendingEdits.set(u.index, {
      index: u.index,
      value: u.value,
      sentSeq: view.connection.lastSeq,
      sentAt: now,
    });
  }
}

export { SEQ_MOD };
