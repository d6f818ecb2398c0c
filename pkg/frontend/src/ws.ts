/**
 * Websocket session link.
 *
 * Wraps one lab-service socket behind an injectable factory so tests
 * can drive it with fakes or the ws package. Incoming messages are
 * decoded with parseFrame and delivered in arrival order; a dropped
 * connection is reopened after a short delay until close() is called,
 * and each reopen announces itself so the app can re-sync the sketch.
 */

import { Frame, Op, encodeOp, parseFrame } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface LabSocketHooks {
  onFrame(frame: Frame): void;
  onStatus(open: boolean): void;
}

export interface LabSocketOptions {
  retryMs?: number;
  setTimeout?: (fn: () => void, ms: number) => unknown;
}

export class LabSocket {
  private socket: WebSocketLike | null = null;
  private closed = false;
  private readonly retryMs: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;

  constructor(private readonly url: string,
              private readonly factory: SocketFactory,
              private readonly hooks: LabSocketHooks,
              options: LabSocketOptions = {}) {
    this.retryMs = options.retryMs ?? 1000;
    this.schedule = options.setTimeout ?? ((fn, ms) => setTimeout(fn, ms));
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      if (socket === this.socket) this.hooks.onStatus(true);
    };
    socket.onmessage = (event) => {
      if (socket !== this.socket) return;
      const frame = parseFrame(event.data);
      if (frame) this.hooks.onFrame(frame);
    };
    socket.onclose = () => {
      if (socket !== this.socket) return;
      this.socket = null;
      this.hooks.onStatus(false);
      if (!this.closed) {
        this.schedule(() => this.connect(), this.retryMs);
      }
    };
  }

  /** True if the op went out on an open socket. */
  send(op: Op): boolean {
    if (!this.socket) return false;
    try {
      this.socket.send(encodeOp(op));
      return true;
    } catch {
      return false;
    }
  }

  close(): void {
    this.closed = true;
    const socket = this.socket;
    this.socket = null;
    if (socket) socket.close();
  }
}
