/** Wire messages for the live session WebSocket, as JSON text frames. */

export const GRID_SIZE = 144;
export const MAX_COUNT = 127;
export const SEQ_MOD = 128;

export const ENGINE_MODES = ["additive", "granular", "drums"] as const;
export type EngineMode = (typeof ENGINE_MODES)[number];

export interface FrameMessage {
  type: "frame";
  seq: number;
  positions: number[];
}

export interface ModeMessage {
  type: "mode";
  name: string;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage = FrameMessage | ModeMessage | ErrorMessage;

export interface Update {
  index: number;
  value: number;
}

function isCount(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v) && v >= 0 && v <= MAX_COUNT;
}

function isIndex(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v) && v >= 0 && v < GRID_SIZE;
}

/**
 * Parse one server text frame. Throws on anything that does not match the
 * protocol exactly; the caller treats a throw as a protocol violation, not
 * as user input to be forgiven.
 */
export function decodeServerMessage(raw: string): ServerMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new Error("server sent non-JSON text");
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("server message is not an object");
  }
  const msg = obj as Record<string, unknown>;
  switch (msg["type"]) {
    case "frame": {
      const seq = msg["seq"];
      const positions = msg["positions"];
      if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0 || seq >= SEQ_MOD) {
        throw new Error("frame seq out of range");
      }
      if (!Array.isArray(positions) || positions.length !== GRID_SIZE) {
        throw new Error("frame positions must hold 144 counts");
      }
      for (const p of positions) {
        if (!isCount(p)) throw new Error("frame position out of range");
      }
      return { type: "frame", seq, positions: positions as number[] };
    }
    case "mode": {
      const name = msg["name"];
      if (typeof name !== "string") throw new Error("mode name must be a string");
      return { type: "mode", name };
    }
    case "error": {
      const reason = msg["reason"];
      if (typeof reason !== "string") throw new Error("error reason must be a string");
      return { type: "error", reason };
    }
    default:
      throw new Error("unknown server message type");
  }
}

export function encodeSculpt(updates: Update[]): string {
  if (updates.length === 0) throw new Error("sculpt batch is empty");
  for (const u of updates) {
    if (!isIndex(u.index)) throw new Error("sculpt index out of range");
    if (!isCount(u.value)) throw new Error("sculpt value out of range");
  }
  return JSON.stringify({
    type: "sculpt",
    updates: updates.map((u) => ({ index: u.index, value: u.value })),
  });
}

export function encodeSet(index: number, value: number): string {
  if (!isIndex(index)) throw new Error("set index out of range");
  if (!isCount(value)) throw new Error("set value out of range");
  return JSON.stringify({ type: "set", index, value });
}

export function encodeMode(name: string): string {
  if (!(ENGINE_MODES as readonly string[]).includes(name)) {
    throw new Error(`unknown mode ${JSON.stringify(name)}`);
  }
  return JSON.stringify({ type: "mode", name });
}

/** True when seq `a` comes after seq `b` on the wrapping 7-bit counter. */
export function seqAfter(a: number, b: number): boolean {
  const d = (a - b + SEQ_MOD) % SEQ_MOD;
  return d >= 1 && d <= SEQ_MOD / 2;
}
