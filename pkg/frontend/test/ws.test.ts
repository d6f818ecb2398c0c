import { describe, expect, it } from "vitest";

import { Frame, toggleSwitch } from "../src/protocol.js";
import { LabSocket, WebSocketLike } from "../src/ws.js";

class FakeSocket implements WebSocketLike {
  sent: string[] = [];
  closedByClient = false;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;

  send(data: string) {
    this.sent.push(data);
  }
  close() {
    this.closedByClient = true;
    this.onclose?.();
  }
  serverSends(obj: unknown) {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }
}

function harness() {
  const sockets: FakeSocket[] = [];
  const frames: Frame[] = [];
  const statuses: boolean[] = [];
  const retries: (() => void)[] = [];
  const socket = new LabSocket(
    "ws://test/sessions/x/ws",
    () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    {
      onFrame: (f) => frames.push(f),
      onStatus: (open) => statuses.push(open),
    },
    { retryMs: 5, setTimeout: (fn) => (retries.push(fn), 0) },
  );
  return { socket, sockets, frames, statuses, retries };
}

describe("LabSocket", () => {
  it("delivers parsed frames in order and drops junk", () => {
    const h = harness();
    const raw = h.sockets[0]!;
    raw.onopen!();
    raw.serverSends({ type: "results", revision: 1, name: "t",
                      converged: true, readings: [], smoke: [], excluded: [] });
    raw.onmessage!({ data: "garbage{" });
    raw.serverSends({ type: "highlight", revision: 1, net: 0,
                      ground: true, terminals: [] });
    expect(h.frames.map((f) => f.type)).toEqual(["results", "highlight"]);
    expect(h.statuses).toEqual([true]);
  });

  it("sends ops only while connected", () => {
    const h = harness();
    const raw = h.sockets[0]!;
    raw.onopen!();
    expect(h.socket.send(toggleSwitch("S1"))).toBe(true);
    expect(JSON.parse(raw.sent[0]!))
      .toStrictEqual({ op: "toggle_switch", component: "S1" });

    raw.onclose!();
    expect(h.socket.send(toggleSwitch("S1"))).toBe(false);
  });

  it("reconnects after a drop until closed deliberately", () => {
    const h = harness();
    expect(h.sockets.length).toBe(1);
    h.sockets[0]!.onopen!();
    h.sockets[0]!.onclose!();
    expect(h.statuses).toEqual([true, false]);
    expect(h.retries.length).toBe(1);

    h.retries[0]!();
    expect(h.sockets.length).toBe(2);
    h.sockets[1]!.onopen!();
    expect(h.statuses).toEqual([true, false, true]);

    h.socket.close();
    expect(h.sockets[1]!.closedByClient).toBe(true);
    expect(h.retries.length).toBe(1);
    expect(h.socket.send(toggleSwitch("S1"))).toBe(false);
  });

  it("ignores events from a socket it already abandoned", () => {
    const h = harness();
    const first = h.sockets[0]!;
    first.onopen!();
    first.onclose!();
    h.retries[0]!();
    const second = h.sockets[1]!;
    second.onopen!();

    // late noise from the dead socket changes nothing
    first.serverSends({ type: "results", revision: 9, name: "t",
                        converged: true, readings: [], smoke: [],
                        excluded: [] });
    first.onclose!();
    expect(h.frames).toEqual([]);
    expect(h.statuses).toEqual([true, false, true]);
  });
});
