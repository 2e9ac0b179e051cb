/**
 * The panel's single connection to a live session. One socket, one view
 * state; message handling mutates the view and the render loop reads it.
 */

import {
  decodeServerMessage,
  encodeMode,
  encodeSculpt,
  type Update,
} from "./protocol.js";
import { SculptBatcher, FRAME_PERIOD_MS } from "./batcher.js";
import {
  FpsEstimator,
  applyDisconnect,
  applyError,
  applyFrame,
  applyModeAck,
  initialViewState,
  notePending,
  type ViewState,
} from "./viewState.js";

/** The slice of the WebSocket surface the client uses; test fakes match it. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface PanelClientOptions {
  socketFactory: SocketFactory;
  now?: () => number;
  framePeriodMs?: number;
  reconnectDelayMs?: number;
  /** Injectable timer for tests; defaults to setTimeout. */
  schedule?: (fn: () => void, delayMs: number) => unknown;
}

export class PanelClient {
  readonly view: ViewState;
  private readonly url: string;
  private readonly makeSocket: SocketFactory;
  private readonly now: () => number;
  private readonly batcher: SculptBatcher;
  private readonly fps = new FpsEstimator();
  private readonly reconnectDelayMs: number;
  private readonly schedule: (fn: () => void, delayMs: number) => unknown;
  private socket: SocketLike | null = null;
  private stopped = false;
  private changed: (() => void) | null = null;

  constructor(url: string, opts: PanelClientOptions) {
    this.url = url;
    this.makeSocket = opts.socketFactory;
    this.now = opts.now ?? (() => Date.now());
    this.batcher = new SculptBatcher(opts.framePeriodMs ?? FRAME_PERIOD_MS);
    this.reconnectDelayMs = opts.reconnectDelayMs ?? 1000;
    this.schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.view = initialViewState();
  }

  /** Register a callback fired after every view mutation. */
  onChange(fn: () => void): void {
    this.changed = fn;
  }

  private notify(): void {
    this.changed?.();
  }

  connect(): void {
    this.stopped = false;
    const sock = this.makeSocket(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.view.connection.connected = true;
      this.notify();
    };
    sock.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      this.handleMessage(ev.data);
    };
    sock.onclose = () => {
      if (this.socket !== sock) return;
      this.socket = null;
      applyDisconnect(this.view, this.fps);
      this.notify();
      if (!this.stopped) {
        this.schedule(() => {
          if (!this.stopped && this.socket === null) this.connect();
        }, this.reconnectDelayMs);
      }
    };
    sock.onerror = () => {
      /* onclose follows and carries the state change */
    };
  }

  close(): void {
    this.stopped = true;
    this.batcher.clear();
    this.socket?.close();
  }

  private handleMessage(raw: string): void {
    let msg;
    try {
      msg = decodeServerMessage(raw);
    } catch (err) {
      applyError(this.view, `protocol violation: ${(err as Error).message}`);
      this.notify();
      return;
    }
    switch (msg.type) {
      case "frame":
        applyFrame(this.view, msg, this.fps, this.now());
        break;
      case "mode":
        applyModeAck(this.view, msg.name);
        break;
      case "error":
        applyError(this.view, msg.reason);
        break;
    }
    this.notify();
  }

  /**
   * Stage sculpt edits. While disconnected they are dropped and counted so
   * the banner can say so; nothing is queued for replay.
   */
  sculpt(updates: Update[]): void {
    if (updates.length === 0) return;
    if (!this.view.connection.connected || this.socket === null) {
      this.view.droppedWhileDisconnected += updates.length;
      this.notify();
      return;
    }
    for (const u of updates) this.batcher.add(u.index, u.value);
  }

  /**
   * Release at most one sculpt batch per frame period. Drive this from a
   * timer at least twice per period so residue from a finished drag still
   * goes out.
   */
  tick(): void {
    if (!this.view.connection.connected || this.socket === null) {
      this.batcher.clear();
      return;
    }
    const batch = this.batcher.flushIfDue(this.now());
    if (batch === null) return;
    this.socket.send(encodeSculpt(batch));
    notePending(this.view, batch, this.now());
    this.notify();
  }

  /** Mode messages bypass the batcher; the view updates only on the ack. */
  requestMode(name: string): void {
    if (!this.view.connection.connected || this.socket === null) {
      this.view.droppedWhileDisconnected += 1;
      this.notify();
      return;
    }
    this.socket.send(encodeMode(name));
  }
}
