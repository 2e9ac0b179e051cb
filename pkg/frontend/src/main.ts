/** Browser entry point: DOM wiring around PanelClient and the painter. */

import { PanelClient, type SocketLike } from "./client.js";
import { FRAME_PERIOD_MS } from "./batcher.js";
import { hitCell, brushUpdates } from "./pointer.js";
import { paintGrid } from "./render.js";
import { ENGINE_MODES } from "./protocol.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function defaultUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("server");
  if (fromQuery) return fromQuery;
  return "ws://127.0.0.1:8765/ws";
}

const canvas = byId<HTMLCanvasElement>("grid");
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("2d canvas unavailable");

const urlInput = byId<HTMLInputElement>("server-url");
const connectBtn = byId<HTMLButtonElement>("connect");
const brushInput = byId<HTMLInputElement>("brush");
const statusEl = byId<HTMLSpanElement>("status");
const modeEl = byId<HTMLSpanElement>("mode-badge");
const fpsEl = byId<HTMLSpanElement>("fps");
const banner = byId<HTMLDivElement>("banner");
const modeBar = byId<HTMLDivElement>("modes");

urlInput.value = defaultUrl();

let client: PanelClient | null = null;
let tickTimer: number | null = null;

function browserSocket(u: string): SocketLike {
  const sock = new WebSocket(u);
  const like: SocketLike = {
    send: (d) => sock.send(d),
    close: () => sock.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  sock.onopen = () => like.onopen?.();
  sock.onmessage = (ev) => like.onmessage?.({ data: ev.data });
  sock.onclose = () => like.onclose?.();
  sock.onerror = () => like.onerror?.();
  return like;
}

function startClient(url: string): void {
  if (client) client.close();
  if (tickTimer !== null) window.clearInterval(tickTimer);
  client = new PanelClient(url, {
    socketFactory: browserSocket,
    now: () => performance.now(),
  });
  client.connect();
  // Two drains per frame period so drag residue never waits a full period.
  tickTimer = window.setInterval(() => client?.tick(), FRAME_PERIOD_MS / 2);
}

connectBtn.addEventListener("click", () => startClient(urlInput.value));

for (const name of ENGINE_MODES) {
  const btn = document.createElement("button");
  btn.textContent = name;
  btn.addEventListener("click", () => client?.requestMode(name));
  modeBar.appendChild(btn);
}

let dragging = false;

function sculptFromEvent(ev: PointerEvent): void {
  if (!client) return;
  const rect = canvas.getBoundingClientRect();
  const hit = hitCell(ev.clientX - rect.left, ev.clientY - rect.top, rect.width, rect.height);
  const radius = Number.parseInt(brushInput.value, 10) || 0;
  client.sculpt(brushUpdates(hit.index, hit.value, radius));
}

canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  canvas.setPointerCapture(ev.pointerId);
  sculptFromEvent(ev);
});
canvas.addEventListener("pointermove", (ev) => {
  if (dragging) sculptFromEvent(ev);
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
});
canvas.addEventListener("pointercancel", () => {
  dragging = false;
});

function repaint(): void {
  if (!client) return;
  const view = client.view;
  paintGrid(ctx!, view, canvas.width, canvas.height);
  const conn = view.connection;
  statusEl.textContent = conn.connected
    ? `connected, seq ${conn.lastSeq ?? "-"}`
    : "disconnected, retrying";
  modeEl.textContent = view.mode ?? "-";
  fpsEl.textContent = conn.fpsEstimate === null ? "-" : conn.fpsEstimate.toFixed(1);
  const notes: string[] = [];
  if (!conn.connected) notes.push("connection lost, reconnecting");
  if (view.droppedWhileDisconnected > 0) {
    notes.push(`${view.droppedWhileDisconnected} edits dropped while offline`);
  }
  if (view.lastError) notes.push(view.lastError);
  banner.textContent = notes.join(" | ");
  banner.style.display = notes.length > 0 ? "block" : "none";
}

function frame(): void {
  repaint();
  window.requestAnimationFrame(frame);
}

startClient(urlInput.value);
window.requestAnimationFrame(frame);
