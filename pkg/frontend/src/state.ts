/**
 * Client view state.
 *
 * Everything rendered derives from one immutable-ish record: the last
 * loaded sketch, the newest results frame, the newest highlight, plus a
 * transient notice line. Frames carry revisions, and applyFrame refuses
 * to move backwards, so the screen always reflects the highest-revision
 * results the server has sent regardless of arrival order.
 */

import {
  Frame,
  HighlightFrame,
  Location,
  Op,
  ResultsFrame,
  SketchDoc,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface Notice {
  kind: "info" | "error";
  text: string;
}

export interface ViewState {
  sketch: SketchDoc | null;
  frame: ResultsFrame | null;
  highlight: HighlightFrame | null;
  notice: Notice | null;
  status: ConnectionStatus;
}

export function initialView(): ViewState {
  return {
    sketch: null,
    frame: null,
    highlight: null,
    notice: null,
    status: "connecting",
  };
}

/**
 * Fold one incoming frame into the view.
 *
 * Results frames older than the one on screen are dropped outright.
 * A fresh results frame also clears any highlight whose revision it
 * passed, since the emphasized net may no longer exist.
 */
export function applyFrame(view: ViewState, frame: Frame): ViewState {
  if (frame.type === "results") {
    if (view.frame && frame.revision < view.frame.revision) {
      return view;
    }
    const highlight =
      view.highlight && view.highlight.revision >= frame.revision
        ? view.highlight
        : null;
    return { ...view, frame, highlight, notice: null };
  }
  if (frame.type === "highlight") {
    return { ...view, highlight: frame };
  }
  // rejected: the sketch is unchanged; surface the first error inline.
  const first = frame.errors[0];
  const text = first
    ? `${frame.op ?? "edit"} rejected: ${first.message}`
    : `${frame.op ?? "edit"} rejected`;
  return { ...view, notice: { kind: "error", text } };
}

export function setStatus(view: ViewState, status: ConnectionStatus): ViewState {
  if (status === view.status) return view;
  return { ...view, status };
}

export function setNotice(view: ViewState, notice: Notice | null): ViewState {
  return { ...view, notice };
}

// ---- optimistic local mirror -----------------------------------------------

function cloneSketch(sketch: SketchDoc): SketchDoc {
  return JSON.parse(JSON.stringify(sketch)) as SketchDoc;
}

function findComponent(sketch: SketchDoc, id: string) {
  return sketch.components.find((c) => c.id === id);
}

/**
 * Mirror an op onto the local sketch so controls feel immediate.
 *
 * The server remains authoritative: a rejected frame leaves its state
 * untouched, and the next GET /sessions/{id}/sketch resynchronizes.
 * Only ops that change the sketch document are mirrored; highlight is
 * read-only and ignored here.
 */
export function applyLocalOp(view: ViewState, op: Op): ViewState {
  if (op.op === "load") {
    return { ...view, sketch: op.sketch, highlight: null };
  }
  if (!view.sketch) return view;
  const sketch = cloneSketch(view.sketch);

  switch (op.op) {
    case "set_property": {
      const part = findComponent(sketch, op.component);
      if (!part) return view;
      part.properties[op.name] = op.value;
      break;
    }
    case "toggle_switch": {
      const part = findComponent(sketch, op.component);
      if (!part) return view;
      const state = part.properties["state"] ?? "open";
      part.properties["state"] = state === "open" ? "closed" : "open";
      break;
    }
    case "set_pot": {
      const part = findComponent(sketch, op.component);
      if (!part) return view;
      part.properties["position"] = op.position;
      break;
    }
    case "set_meter_mode": {
      const part = findComponent(sketch, op.component);
      if (!part) return view;
      part.properties["mode"] = op.mode;
      break;
    }
    case "move_probe": {
      const part = findComponent(sketch, op.component);
      if (!part) return view;
      if (op.to === null) {
        delete part.placements[op.pin];
      } else {
        part.placements[op.pin] = op.to as Location;
      }
      break;
    }
    case "add_wire": {
      sketch.wires.push({ id: op.id, a: op.a, b: op.b });
      break;
    }
    case "remove_wire": {
      sketch.wires = sketch.wires.filter((w) => w.id !== op.id);
      break;
    }
    default:
      return view;
  }
  return { ...view, sketch };
}
