import { describe, expect, it } from "vitest";

import {
  HighlightFrame,
  ResultsFrame,
  SketchDoc,
  loadSketch,
  moveProbe,
  setMeterMode,
  setPot,
  setProperty,
  toggleSwitch,
} from "../src/protocol.js";
import {
  ViewState,
  applyFrame,
  applyLocalOp,
  initialView,
  setStatus,
} from "../src/state.js";

function results(revision: number,
                 extra: Partial<ResultsFrame> = {}): ResultsFrame {
  return {
    type: "results", revision, name: "t", converged: true,
    readings: [], smoke: [], excluded: [], ...extra,
  };
}

function sketch(): SketchDoc {
  return {
    format_version: 1,
    name: "bench",
    breadboards: [{ id: "bb", columns: 10 }],
    components: [
      { id: "S1", kind: "switch_spst", properties: {},
        placements: { "1": { column: 1, row: "a" },
                      "2": { column: 2, row: "a" } } },
      { id: "P1", kind: "potentiometer", properties: { position: 0.5 },
        placements: {} },
      { id: "M1", kind: "multimeter", properties: { mode: "V_DC" },
        placements: { COM: { column: 3, row: "a" } } },
    ],
    wires: [{ id: "W1", a: { column: 1, row: "b" },
              b: { column: 2, row: "b" } }],
  };
}

function loaded(): ViewState {
  return applyLocalOp(initialView(), loadSketch(sketch()));
}

describe("frame application", () => {
  it("keeps only the highest-revision results frame", () => {
    let view = applyFrame(initialView(), results(5));
    expect(view.frame!.revision).toBe(5);

    const stale = applyFrame(view, results(3));
    expect(stale).toBe(view);
    expect(stale.frame!.revision).toBe(5);

    view = applyFrame(view, results(7));
    expect(view.frame!.revision).toBe(7);
  });

  it("clears a highlight once results pass its revision", () => {
    const glow: HighlightFrame = {
      type: "highlight", revision: 4, net: 1, ground: false,
      terminals: ["R1.1"],
    };
    let view = applyFrame(initialView(), results(4));
    view = applyFrame(view, glow);
    expect(view.highlight).toBe(glow);

    view = applyFrame(view, results(5));
    expect(view.highlight).toBeNull();
  });

  it("surfaces rejections as a notice without touching the sketch", () => {
    const view = loaded();
    const next = applyFrame(view, {
      type: "rejected", revision: 2, op: "set_pot",
      errors: [{ code: "BAD_VALUE", subject: "P1",
                 message: "position out of range" }],
    });
    expect(next.sketch).toBe(view.sketch);
    expect(next.notice!.kind).toBe("error");
    expect(next.notice!.text).toContain("set_pot");
    expect(next.notice!.text).toContain("position out of range");
  });

  it("clears the notice when fresh results land", () => {
    let view = applyFrame(loaded(), {
      type: "rejected", revision: 1, op: null, errors: [],
    });
    expect(view.notice).not.toBeNull();
    view = applyFrame(view, results(2));
    expect(view.notice).toBeNull();
  });
});

describe("optimistic mirror", () => {
  it("toggles a switch with open as the default state", () => {
    let view = loaded();
    view = applyLocalOp(view, toggleSwitch("S1"));
    expect(view.sketch!.components[0]!.properties["state"]).toBe("closed");
    view = applyLocalOp(view, toggleSwitch("S1"));
    expect(view.sketch!.components[0]!.properties["state"]).toBe("open");
  });

  it("mirrors pot, meter mode, and property edits", () => {
    let view = loaded();
    view = applyLocalOp(view, setPot("P1", 0.9));
    view = applyLocalOp(view, setMeterMode("M1", "OHM"));
    view = applyLocalOp(view, setProperty("S1", "state", "closed"));
    const parts = view.sketch!.components;
    expect(parts[1]!.properties["position"]).toBe(0.9);
    expect(parts[2]!.properties["mode"]).toBe("OHM");
    expect(parts[0]!.properties["state"]).toBe("closed");
  });

  it("moves and lifts probes", () => {
    let view = loaded();
    view = applyLocalOp(view, moveProbe("M1", "COM", { column: 9, row: "j" }));
    expect(view.sketch!.components[2]!.placements["COM"])
      .toStrictEqual({ column: 9, row: "j" });
    view = applyLocalOp(view, moveProbe("M1", "COM", null));
    expect("COM" in view.sketch!.components[2]!.placements).toBe(false);
  });

  it("adds and removes wires", () => {
    let view = loaded();
    view = applyLocalOp(view, {
      op: "add_wire", id: "W2",
      a: { column: 4, row: "a" }, b: { column: 5, row: "a" },
    });
    expect(view.sketch!.wires.map((w) => w.id)).toEqual(["W1", "W2"]);
    view = applyLocalOp(view, { op: "remove_wire", id: "W1" });
    expect(view.sketch!.wires.map((w) => w.id)).toEqual(["W2"]);
  });

  it("ignores ops for unknown parts and never mutates the old sketch", () => {
    const view = loaded();
    const before = JSON.stringify(view.sketch);
    const next = applyLocalOp(view, toggleSwitch("GHOST"));
    expect(next).toBe(view);

    const changed = applyLocalOp(view, setPot("P1", 0.1));
    expect(changed.sketch).not.toBe(view.sketch);
    expect(JSON.stringify(view.sketch)).toBe(before);
  });
});

describe("status", () => {
  it("tracks the connection and is a no-op when unchanged", () => {
    const view = initialView();
    expect(view.status).toBe("connecting");
    const open = setStatus(view, "open");
    expect(open.status).toBe("open");
    expect(setStatus(open, "open")).toBe(open);
  });
});
