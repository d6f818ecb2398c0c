/**
 * Browser entry point.
 *
 * Boot order: resolve a session (the ?session= parameter, else a new
 * one seeded with the demo bench), fetch its sketch, open the session
 * websocket, then render on every state change. All interaction goes
 * through sendOp, which mirrors the edit locally for responsiveness
 * and ships the protocol message; the server's next results frame is
 * authoritative. Rendering is coalesced onto animation frames so the
 * page has a single rendering path fed by an ordered event stream.
 */

import {
  Location,
  Op,
  SketchDoc,
  highlight,
  moveProbe,
  setMeterMode,
  setPot,
  toggleSwitch,
} from "./protocol.js";
import {
  ViewState,
  applyFrame,
  applyLocalOp,
  initialView,
  setNotice,
  setStatus,
} from "./state.js";
import { mount, renderScene } from "./render.js";
import { POT_THROTTLE_MS, Throttle, createThrottle } from "./throttle.js";
import { LabSocket, WebSocketLike } from "./ws.js";

const DEMO: SketchDoc = {
  format_version: 1,
  name: "pot divider bench",
  breadboards: [{ id: "bb", columns: 30 }],
  components: [
    {
      id: "V1", kind: "dc_supply",
      properties: { voltage: 5.0, internal_resistance: 0.0 },
      placements: {
        "+": { rail: "V+top", position: 1 },
        "-": { rail: "V−top", position: 1 },
      },
    },
    {
      id: "G1", kind: "ground",
      properties: {},
      placements: { "1": { rail: "V−top", position: 2 } },
    },
    {
      id: "P1", kind: "potentiometer",
      properties: { max_resistance: 10000.0, position: 0.5 },
      placements: {
        "1": { column: 5, row: "a" },
        wiper: { column: 10, row: "a" },
        "2": { column: 15, row: "a" },
      },
    },
    {
      id: "S1", kind: "switch_spst",
      properties: { state: "open" },
      placements: {
        "1": { column: 10, row: "e" },
        "2": { column: 15, row: "e" },
      },
    },
    {
      id: "M1", kind: "multimeter",
      properties: { mode: "V_DC" },
      placements: {
        COM: { column: 15, row: "c" },
        "VΩ": { column: 10, row: "c" },
      },
    },
  ],
  wires: [
    { id: "W1", a: { rail: "V+top", position: 3 },
      b: { column: 5, row: "c" } },
    { id: "W2", a: { column: 15, row: "d" },
      b: { rail: "V−top", position: 5 } },
  ],
};

function browserSocketFactory(url: string): WebSocketLike {
  const raw = new WebSocket(url);
  const like: WebSocketLike = {
    send: (data) => raw.send(data),
    close: () => raw.close(),
    onopen: null,
    onclose: null,
    onmessage: null,
  };
  raw.onopen = () => like.onopen?.();
  raw.onclose = () => like.onclose?.();
  raw.onmessage = (event) => like.onmessage?.({ data: event.data });
  return like;
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  let view: ViewState = initialView();
  let scheduled = false;

  function redraw() {
    mount(renderScene(view), root!);
  }

  function update(next: ViewState) {
    view = next;
    if (!scheduled) {
      scheduled = true;
      requestAnimationFrame(() => {
        scheduled = false;
        redraw();
      });
    }
  }

  redraw();

  async function ensureSession(): Promise<string> {
    const params = new URLSearchParams(location.search);
    const existing = params.get("session");
    if (existing) return existing;
    const res = await fetch("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ sketch: DEMO }),
    });
    if (!res.ok) throw new Error(`session create failed with ${res.status}`);
    const body = await res.json() as { session_id: string };
    params.set("session", body.session_id);
    history.replaceState(null, "", `?${params.toString()}`);
    return body.session_id;
  }

  async function fetchSketch(sid: string): Promise<SketchDoc> {
    const res = await fetch(`/sessions/${sid}/sketch`);
    if (!res.ok) throw new Error(`sketch fetch failed with ${res.status}`);
    const body = await res.json() as { sketch: SketchDoc };
    return body.sketch;
  }

  ensureSession().then(async (sid) => {
    const sketch = await fetchSketch(sid);
    update({ ...view, sketch });

    const scheme = location.protocol === "https:" ? "wss" : "ws";
    const url = `${scheme}://${location.host}/sessions/${sid}/ws`;
    let resyncNeeded = false;

    const socket = new LabSocket(url, browserSocketFactory, {
      onFrame(frame) {
        update(applyFrame(view, frame));
      },
      onStatus(open) {
        update(setStatus(view, open ? "open" : "closed"));
        if (!open) {
          resyncNeeded = true;
          return;
        }
        if (resyncNeeded) {
          resyncNeeded = false;
          fetchSketch(sid)
            .then((fresh) => update({ ...view, sketch: fresh }))
            .catch(() => update(setNotice(view, {
              kind: "error", text: "could not reload the sketch",
            })));
        }
      },
    });

    function sendOp(op: Op, mirror = true) {
      if (mirror) update(applyLocalOp(view, op));
      if (!socket.send(op)) {
        update(setNotice(view, {
          kind: "error", text: "not connected; change not sent",
        }));
      }
    }

    const potSenders = new Map<string, Throttle<number>>();
    function potSender(id: string): Throttle<number> {
      let sender = potSenders.get(id);
      if (!sender) {
        sender = createThrottle<number>((position) => {
          if (!socket.send(setPot(id, position))) {
            update(setNotice(view, {
              kind: "error", text: "not connected; change not sent",
            }));
          }
        }, POT_THROTTLE_MS);
        potSenders.set(id, sender);
      }
      return sender;
    }

    // probe drag: press on a meter jack, release over any hole
    let dragging: { component: string; pin: string } | null = null;

    root.addEventListener("pointerdown", (event) => {
      const target = event.target as Element;
      const jack = target.closest("[data-probe]");
      if (!jack) return;
      const group = jack.closest("[data-component]");
      const pin = jack.getAttribute("data-pin");
      if (!group || !pin) return;
      dragging = { component: group.getAttribute("data-component")!, pin };
      event.preventDefault();
    });

    root.addEventListener("pointerup", (event) => {
      if (!dragging) return;
      const probe = dragging;
      dragging = null;
      const under = document.elementFromPoint(event.clientX, event.clientY);
      const hole = under ? under.closest("[data-loc]") : null;
      if (!hole) return;
      const loc = JSON.parse(hole.getAttribute("data-loc")!) as Location;
      sendOp(moveProbe(probe.component, probe.pin, loc));
    });

    root.addEventListener("click", (event) => {
      const target = event.target as Element;
      const toggle = target.closest("[data-toggle]");
      if (toggle) {
        sendOp(toggleSwitch(toggle.getAttribute("data-toggle")!));
        return;
      }
      const terminal = target.closest("[data-terminal]");
      if (terminal) {
        const group = terminal.closest("[data-component]");
        const pin = terminal.getAttribute("data-pin");
        if (group && pin) {
          sendOp(highlight(group.getAttribute("data-component")!, pin), false);
        }
        return;
      }
      // a click anywhere else on the board dismisses the highlight
      if (view.highlight && target.closest("svg.board")) {
        update({ ...view, highlight: null });
      }
    });

    root.addEventListener("input", (event) => {
      const target = event.target as HTMLInputElement;
      if (!target.matches("input[data-pot]")) return;
      const id = target.getAttribute("data-pot")!;
      const position = Number(target.value);
      if (!Number.isFinite(position)) return;
      update(applyLocalOp(view, setPot(id, position)));
      potSender(id).push(position);
    });

    root.addEventListener("change", (event) => {
      const target = event.target as HTMLSelectElement;
      if (!target.matches("select[data-meter-mode]")) return;
      sendOp(setMeterMode(target.getAttribute("data-meter-mode")!,
                          target.value));
    });
  }).catch((err: unknown) => {
    update(setNotice(view, {
      kind: "error",
      text: `could not start a session: ${String(err)}`,
    }));
  });
}

if (typeof document !== "undefined") {
  boot();
}
