import { describe, expect, test } from "vitest";
import { PanelClient, type SocketLike } from "../src/client.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closedByClient = false;
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.closedByClient = true;
    this.onclose?.();
  }
  // test-side controls
  open(): void {
    this.onopen?.();
  }
  push(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }
  pushRaw(data: string): void {
    this.onmessage?.({ data });
  }
  dropFromServer(): void {
    this.onclose?.();
  }
}

interface Harness {
  client: PanelClient;
  sockets: FakeSocket[];
  pendingTimers: (() => void)[];
  setNow(t: number): void;
}

function makeHarness(): Harness {
  let now = 0;
  const sockets: FakeSocket[] = [];
  const pendingTimers: (() => void)[] = [];
  const client = new PanelClient("ws://fake/ws", {
    socketFactory: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    now: () => now,
    reconnectDelayMs: 100,
    schedule: (fn) => {
      pendingTimers.push(fn);
      return 0;
    },
  });
  return {
    client,
    sockets,
    pendingTimers,
    setNow: (t) => {
      now = t;
    },
  };
}

function frame(seq: number, edits: Record<number, number> = {}): object {
  const positions = new Array(144).fill(0);
  for (const [i, v] of Object.entries(edits)) positions[Number(i)] = v;
  return { type: "frame", seq, positions };
}

describe("connection lifecycle", () => {
  test("announce on connect populates the mode badge", () => {
    const h = makeHarness();
    h.client.connect();
    h.sockets[0]!.open();
    h.sockets[0]!.push({ type: "mode", name: "additive" });
    expect(h.client.view.connection.connected).toBe(true);
    expect(h.client.view.mode).toBe("additive");
  });

  test("server drop flips to disconnected and schedules a reconnect", () => {
    const h = makeHarness();
    h.client.connect();
    h.sockets[0]!.open();
    h.sockets[0]!.dropFromServer();
    expect(h.client.view.connection.connected).toBe(false);
    expect(h.pendingTimers).toHaveLength(1);
    h.pendingTimers[0]!();
    expect(h.sockets).toHaveLength(2);
    h.sockets[1]!.open();
    expect(h.client.view.connection.connected).toBe(true);
  });

  test("close() stops the reconnect loop", () => {
    const h = makeHarness();
    h.client.connect();
    h.sockets[0]!.open();
    h.client.close();
    for (const t of h.pendingTimers) t();
    expect(h.sockets).toHaveLength(1);
  });
});

describe("sculpt round trip", () => {
  test("edit goes out as one sculpt batch and is echoed by the next frame", () => {
    const h = makeHarness();
    h.client.connect();
    const sock = h.sockets[0]!;
    sock.open();
    sock.push(frame(4));

    h.client.sculpt([{ index: 0, value: 127 }]);
    h.setNow(40);
    h.client.tick();

    expect(sock.sent).toHaveLength(1);
    expect(JSON.parse(sock.sent[0]!)).toEqual({
      type: "sculpt",
      updates: [{ index: 0, value: 127 }],
    });
    expect(h.client.view.pendingEdits.get(0)?.sentSeq).toBe(4);
    // heights still show the server's last frame, not the local edit
    expect(h.client.view.positions[0]).toBe(0);

    sock.push(frame(5, { 0: 127 }));
    expect(h.client.view.positions[0]).toBe(127);
    expect(h.client.view.pendingEdits.size).toBe(0);
  });

  test("60 Hz input stays at or under one batch per frame period", () => {
    const h = makeHarness();
    h.client.connect();
    const sock = h.sockets[0]!;
    sock.open();
    for (let i = 0; i < 120; i++) {
      h.setNow(i * (1000 / 60));
      h.client.sculpt([{ index: i % 144, value: 64 }]);
      h.client.tick();
    }
    expect(sock.sent.length).toBeLessThanOrEqual(61);
    expect(sock.sent.length).toBeGreaterThanOrEqual(50);
  });

  test("edits while disconnected are dropped and counted, never queued", () => {
    const h = makeHarness();
    h.client.connect(); // socket created but never opened
    h.client.sculpt([
      { index: 0, value: 1 },
      { index: 1, value: 2 },
    ]);
    h.setNow(1000);
    h.client.tick();
    expect(h.sockets[0]!.sent).toHaveLength(0);
    expect(h.client.view.droppedWhileDisconnected).toBe(2);
  });
});

describe("mode control", () => {
  test("badge follows acknowledgments, not requests", () => {
    const h = makeHarness();
    h.client.connect();
    const sock = h.sockets[0]!;
    sock.open();
    h.client.requestMode("drums");
    expect(JSON.parse(sock.sent[0]!)).toEqual({ type: "mode", name: "drums" });
    expect(h.client.view.mode).toBeNull();

    // acks may interleave under rapid toggling; the last ack wins
    sock.push({ type: "mode", name: "additive" });
    expect(h.client.view.mode).toBe("additive");
    sock.push({ type: "mode", name: "drums" });
    expect(h.client.view.mode).toBe("drums");
  });

  test("rejected mode surfaces the server reason, cleared by the next ack", () => {
    const h = makeHarness();
    h.client.connect();
    const sock = h.sockets[0]!;
    sock.open();
    sock.push({ type: "error", reason: "granular mode needs source_wav in the session config" });
    expect(h.client.view.lastError).toContain("source_wav");
    sock.push({ type: "mode", name: "additive" });
    expect(h.client.view.lastError).toBeNull();
  });

  test("invalid local mode names are refused before any send", () => {
    const h = makeHarness();
    h.client.connect();
    h.sockets[0]!.open();
    expect(() => h.client.requestMode("reverb")).toThrow();
    expect(h.sockets[0]!.sent).toHaveLength(0);
  });
});

describe("server misbehavior", () => {
  test("malformed server text becomes a visible protocol error", () => {
    const h = makeHarness();
    h.client.connect();
    const sock = h.sockets[0]!;
    sock.open();
    sock.pushRaw("not json at all");
    expect(h.client.view.lastError).toContain("protocol violation");
  });

  test("fps estimate tracks injected frame times", () => {
    const h = makeHarness();
    h.client.connect();
    const sock = h.sockets[0]!;
    sock.open();
    for (let i = 0; i < 30; i++) {
      h.setNow(i * (1000 / 30));
      sock.push(frame(i));
    }
    const est = h.client.view.connection.fpsEstimate!;
    expect(est).toBeGreaterThanOrEqual(24);
    expect(est).toBeLessThanOrEqual(36);
  });
});
