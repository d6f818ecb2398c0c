/**
 * End to end against the real service: spawn `circsim serve`, create a
 * session over HTTP, drive it through the websocket exactly as the
 * browser code does, and check the contract the page relies on — fast
 * round trips, byte-identical reading text, greyed excluded parts,
 * smoke icons, highlights, and rejection notices.
 */

import { ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import {
  Frame,
  ResultsFrame,
  SketchDoc,
  highlight,
  toggleSwitch,
} from "../src/protocol.js";
import { findScene, renderScene } from "../src/render.js";
import { ViewState, applyFrame, initialView } from "../src/state.js";
import { LabSocket, WebSocketLike } from "../src/ws.js";
import { benchSketch } from "./bench.js";

const PORT = 8300 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let socket: LabSocket;
let sessionId: string;
let sketch: SketchDoc;

const frames: Frame[] = [];
const arrivals: number[] = [];

function nodeSocketFactory(url: string): WebSocketLike {
  const raw = new WebSocket(url);
  const like: WebSocketLike = {
    send: (data) => raw.send(data),
    close: () => raw.close(),
    onopen: null,
    onclose: null,
    onmessage: null,
  };
  raw.on("open", () => like.onopen?.());
  raw.on("close", () => like.onclose?.());
  raw.on("message", (data) => like.onmessage?.({ data: data.toString() }));
  return like;
}

async function waitFor<T>(probe: () => T | null, ms: number,
                          what: string): Promise<T> {
  const deadline = Date.now() + ms;
  for (;;) {
    const got = probe();
    if (got !== null) return got;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 5));
  }
}

function lastResults(): ResultsFrame | null {
  for (let i = frames.length - 1; i >= 0; i--) {
    const frame = frames[i]!;
    if (frame.type === "results") return frame;
  }
  return null;
}

function resultsWithRevisionAtLeast(rev: number): ResultsFrame | null {
  const last = lastResults();
  return last && last.revision >= rev ? last : null;
}

function currentView(): ViewState {
  let view: ViewState = { ...initialView(), sketch, status: "open" };
  for (const frame of frames) view = applyFrame(view, frame);
  return view;
}

beforeAll(async () => {
  const repoRoot = fileURLToPath(new URL("../..", import.meta.url));
  server = spawn("python3", ["-m", "circsim.cli", "serve",
                             "--host", "127.0.0.1", "--port", String(PORT)],
                 { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] });
  const stderr: string[] = [];
  server.stderr!.on("data", (chunk) => stderr.push(String(chunk)));

  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/healthz`);
      if (res.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service never came up:\n${stderr.join("")}`);
    }
    await new Promise((r) => setTimeout(r, 100));
  }

  const created = await fetch(`${BASE}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ sketch: benchSketch() }),
  });
  expect(created.ok).toBe(true);
  sessionId = ((await created.json()) as { session_id: string }).session_id;

  const fetched = await fetch(`${BASE}/sessions/${sessionId}/sketch`);
  expect(fetched.ok).toBe(true);
  sketch = ((await fetched.json()) as { sketch: SketchDoc }).sketch;

  socket = new LabSocket(
    `ws://127.0.0.1:${PORT}/sessions/${sessionId}/ws`,
    nodeSocketFactory,
    {
      onFrame: (frame) => {
        frames.push(frame);
        arrivals.push(Date.now());
      },
      onStatus: () => undefined,
    },
  );
  await waitFor(lastResults, 10_000, "the initial results frame");
});

afterAll(() => {
  socket?.close();
  server?.kill("SIGTERM");
});

describe("initial frame", () => {
  it("reads 5.000V on the meter and excludes the unmodelable part", () => {
    const frame = lastResults()!;
    expect(frame.converged).toBe(true);
    const reading = frame.readings.find((r) => r.meter === "M1")!;
    expect(reading.status).toBe("OK");
    expect(reading.display).toBe("5.000V");
    expect(frame.excluded).toContain("A1");
    expect(frame.smoke).toEqual([]);
  });

  it("renders that reading byte-identically and greys A1", () => {
    const scene = renderScene(currentView());
    const lcds = findScene(scene, (n) =>
      (n.attrs["class"] ?? "").includes("lcd")
      && n.attrs["data-meter"] === "M1");
    expect(lcds.length).toBeGreaterThan(0);
    for (const lcd of lcds) {
      expect(lcd.text).toBe(lastResults()!.readings[0]!.display);
      expect(lcd.text).toBe("5.000V");
    }
    const greyed = findScene(scene, (n) =>
      n.attrs["data-component"] === "A1"
      && (n.attrs["class"] ?? "").split(" ").includes("excluded"));
    expect(greyed.length).toBeGreaterThan(0);
  });
});

describe("interaction round trips", () => {
  it("toggling a switch lands a fresh frame within 200 ms", async () => {
    const before = lastResults()!.revision;
    const started = Date.now();
    expect(socket.send(toggleSwitch("SW1"))).toBe(true);

    const frame = await waitFor(
      () => resultsWithRevisionAtLeast(before + 1), 5_000,
      "the toggle frame");
    const elapsed = arrivals[arrivals.length - 1]! - started;
    expect(elapsed).toBeLessThan(200);

    const reading = frame.readings.find((r) => r.meter === "M1")!;
    expect(reading.display).toBe("0.000V");
  });

  it("shorting the battery raises smoke and a smoke icon", async () => {
    const before = lastResults()!.revision;
    socket.send(toggleSwitch("SW2"));
    const frame = await waitFor(
      () => resultsWithRevisionAtLeast(before + 1), 5_000,
      "the short-circuit frame");

    const smoke = frame.smoke.find((s) => s.component === "B2")!;
    expect(smoke.kind).toBe("SHORT_CIRCUIT");
    expect(smoke.measured).toBeGreaterThan(smoke.limit);

    const scene = renderScene(currentView());
    const icons = findScene(scene, (n) =>
      (n.attrs["class"] ?? "").includes("smoke-icon")
      && n.attrs["data-component"] === "B2");
    expect(icons.length).toBe(1);
  });

  it("highlight returns the net and the scene glows those terminals", async () => {
    const count = frames.length;
    socket.send(highlight("R1", "2"));
    const frame = await waitFor(() => {
      for (let i = count; i < frames.length; i++) {
        if (frames[i]!.type === "highlight") return frames[i]!;
      }
      return null;
    }, 5_000, "the highlight frame");

    if (frame.type !== "highlight") throw new Error("unreachable");
    expect(frame.terminals).toContain("R1.2");
    expect(frame.terminals).toContain("SW1.1");
    expect(frame.terminals).toEqual([...frame.terminals].sort());

    const scene = renderScene(currentView());
    const glowing = findScene(scene, (n) =>
      (n.attrs["class"] ?? "").split(" ").includes("glow"));
    expect(glowing.map((n) => n.attrs["data-terminal"]).sort())
      .toEqual([...frame.terminals].sort());
  });

  it("an edit against a missing part is rejected, not fatal", async () => {
    const count = frames.length;
    socket.send(toggleSwitch("GHOST"));
    const frame = await waitFor(() => {
      for (let i = count; i < frames.length; i++) {
        if (frames[i]!.type === "rejected") return frames[i]!;
      }
      return null;
    }, 5_000, "the rejection frame");

    if (frame.type !== "rejected") throw new Error("unreachable");
    expect(frame.op).toBe("toggle_switch");
    expect(frame.errors.length).toBeGreaterThan(0);

    const scene = renderScene(currentView());
    const notices = findScene(scene, (n) =>
      (n.attrs["class"] ?? "").includes("notice-error"));
    expect(notices.length).toBe(1);

    // the session still answers afterwards
    const before = lastResults()!.revision;
    socket.send(toggleSwitch("SW2"));
    const healed = await waitFor(
      () => resultsWithRevisionAtLeast(before + 1), 5_000,
      "a frame after the rejection");
    expect(healed.smoke).toEqual([]);
  });
});
