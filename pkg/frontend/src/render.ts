/**
 * Scene construction.
 *
 * renderScene turns a ViewState into a plain tree of nodes with no DOM
 * involved, which keeps every visual rule testable in node: reading
 * text is copied from the server's display field byte for byte, parts
 * the solver excluded carry the excluded class, smoke icons appear for
 * every smoke event, and highlighted terminals glow. mount() is the
 * only piece that touches the document.
 */

import { layoutSketch, GRID_ROWS, PartLayout, Spot } from "./board.js";
import { ResultsFrame, SketchDoc, SmokeDoc } from "./protocol.js";
import { ViewState } from "./state.js";

export interface SceneNode {
  tag: string;
  attrs: Record<string, string>;
  children: SceneNode[];
  text?: string;
}

export function el(tag: string, attrs: Record<string, string> = {},
                   children: SceneNode[] = [], text?: string): SceneNode {
  const node: SceneNode = { tag, attrs, children };
  if (text !== undefined) node.text = text;
  return node;
}

/** Depth-first visit; handy for tests and event wiring. */
export function walkScene(node: SceneNode, fn: (n: SceneNode) => void): void {
  fn(node);
  for (const child of node.children) walkScene(child, fn);
}

export function findScene(node: SceneNode,
                          pred: (n: SceneNode) => boolean): SceneNode[] {
  const hits: SceneNode[] = [];
  walkScene(node, (n) => {
    if (pred(n)) hits.push(n);
  });
  return hits;
}

const CELL = 26;
const PAD = 24;
const BOARD_GAP = 40;

const STATUS_TEXT: Record<string, string> = {
  connecting: "connecting…",
  open: "live",
  closed: "connection lost — retrying",
};

function classes(...names: (string | false)[]): string {
  return names.filter(Boolean).join(" ");
}

function px(v: number): string {
  return String(Math.round(v * 100) / 100);
}

function gridX(x: number): number {
  return PAD + (x - 1) * CELL;
}

function gridY(y: number, offset: number): number {
  return offset + PAD + y * CELL;
}

function locAttr(board: string, column: number, row: string): string;
function locAttr(board: string, rail: string, position: number): string;
function locAttr(board: string, a: number | string, b: string | number): string {
  if (typeof a === "number") {
    return JSON.stringify({ board, column: a, row: b });
  }
  return JSON.stringify({ board, rail: a, position: b });
}

function holeLattice(boardId: string, columns: number,
                     offset: number): SceneNode[] {
  const dots: SceneNode[] = [];
  const rail = (tag: string, y: number) => {
    for (let p = 1; p <= columns; p++) {
      dots.push(el("circle", {
        class: "hole rail-hole",
        cx: px(gridX(p)), cy: px(gridY(y, offset)), r: "2.5",
        "data-loc": locAttr(boardId, tag, p),
      }));
    }
  };
  rail("V+top", 0);
  rail("V−top", 1);
  rail("V+bot", 15);
  rail("V−bot", 16);
  const rows: [string, number][] = [
    ["a", 3], ["b", 4], ["c", 5], ["d", 6], ["e", 7],
    ["f", 9], ["g", 10], ["h", 11], ["i", 12], ["j", 13],
  ];
  for (const [row, y] of rows) {
    for (let c = 1; c <= columns; c++) {
      dots.push(el("circle", {
        class: "hole",
        cx: px(gridX(c)), cy: px(gridY(y, offset)), r: "2.5",
        "data-loc": locAttr(boardId, c, row),
      }));
    }
  }
  return dots;
}

function spotXY(spot: Spot, offsets: Map<string, number>): [number, number] {
  const offset = offsets.get(spot.board) ?? 0;
  return [gridX(spot.x), gridY(spot.y, offset)];
}

function partNode(part: PartLayout, sketch: SketchDoc,
                  frame: ResultsFrame | null, excluded: Set<string>,
                  glowing: Set<string>,
                  offsets: Map<string, number>): SceneNode {
  const doc = sketch.components.find((c) => c.id === part.id);
  const isExcluded = excluded.has(part.id);
  const children: SceneNode[] = [];

  if (part.pins.length === 2) {
    const [a, b] = part.pins;
    const [ax, ay] = spotXY(a!, offsets);
    const [bx, by] = spotXY(b!, offsets);
    children.push(el("line", {
      class: "part-body", x1: px(ax), y1: px(ay), x2: px(bx), y2: px(by),
    }));
  }
  for (const pin of part.pins) {
    const [x, y] = spotXY(pin, offsets);
    const term = `${part.id}.${pin.pin}`;
    const attrs: Record<string, string> = {
      class: classes("pin", glowing.has(term) && "glow"),
      cx: px(x), cy: px(y), r: "5",
      "data-terminal": term,
      "data-pin": pin.pin,
    };
    if (part.kind === "multimeter") attrs["data-probe"] = term;
    children.push(el("circle", attrs));
  }

  const offset = offsets.get(part.board) ?? 0;
  const lx = gridX(part.x);
  const ly = gridY(part.y, offset);
  let label = part.id;
  if (part.kind === "switch_spst" && doc) {
    label = `${part.id} (${doc.properties["state"] ?? "open"})`;
  }
  children.push(el("text", {
    class: "part-label", x: px(lx), y: px(ly - 8),
  }, [], label));

  if (part.kind === "multimeter" && frame) {
    const reading = frame.readings.find((r) => r.meter === part.id);
    if (reading) {
      // LCD text is the server string verbatim, never reformatted.
      children.push(el("text", {
        class: "lcd", x: px(lx), y: px(ly + 18),
        "data-meter": part.id, "data-status": reading.status,
      }, [], reading.display));
    }
  }

  const attrs: Record<string, string> = {
    class: classes("part", isExcluded && "excluded"),
    "data-component": part.id,
    "data-kind": part.kind,
  };
  if (part.kind === "switch_spst") attrs["data-toggle"] = part.id;
  return el("g", attrs, children);
}

function smokeNodes(smoke: SmokeDoc[], parts: PartLayout[],
                    offsets: Map<string, number>): SceneNode[] {
  const out: SceneNode[] = [];
  for (const event of smoke) {
    const part = parts.find((p) => p.id === event.component);
    if (!part) continue;
    const offset = offsets.get(part.board) ?? 0;
    out.push(el("text", {
      class: "smoke-icon",
      x: px(gridX(part.x) + 10), y: px(gridY(part.y, offset) - 14),
      "data-component": event.component,
      "data-kind": event.kind,
    }, [], "\u{1F4A8}"));
  }
  return out;
}

function boardSvg(view: ViewState, sketch: SketchDoc): SceneNode {
  const layout = layoutSketch(sketch);
  const frame = view.frame;
  const excluded = new Set(frame ? frame.excluded : []);
  const glowing = new Set(view.highlight ? view.highlight.terminals : []);

  const offsets = new Map<string, number>();
  const boardHeight = PAD + GRID_ROWS * CELL;
  let y = 0;
  let maxColumns = 0;
  for (const board of layout.boards) {
    offsets.set(board.id, y);
    y += boardHeight + BOARD_GAP;
    maxColumns = Math.max(maxColumns, board.columns);
  }

  const children: SceneNode[] = [];
  for (const board of layout.boards) {
    const offset = offsets.get(board.id)!;
    children.push(el("rect", {
      class: "board-back",
      x: px(PAD / 2), y: px(offset + PAD / 2),
      width: px(PAD + board.columns * CELL),
      height: px(boardHeight),
      rx: "6",
    }));
    children.push(el("text", {
      class: "board-label", x: px(PAD / 2 + 6), y: px(offset + PAD / 2 - 4),
    }, [], board.id));
    children.push(...holeLattice(board.id, board.columns, offset));
  }
  for (const wire of layout.wires) {
    const [ax, ay] = spotXY(wire.a, offsets);
    const [bx, by] = spotXY(wire.b, offsets);
    children.push(el("line", {
      class: "wire", "data-wire": wire.id,
      x1: px(ax), y1: px(ay), x2: px(bx), y2: px(by),
    }));
  }
  for (const part of layout.parts) {
    children.push(partNode(part, sketch, frame, excluded, glowing, offsets));
  }
  if (frame) {
    children.push(...smokeNodes(frame.smoke, layout.parts, offsets));
  }

  const width = PAD * 2 + Math.max(maxColumns, 1) * CELL;
  const height = Math.max(y - BOARD_GAP, boardHeight) + PAD;
  return el("svg", {
    // highlighting dims every terminal the reply did not name
    class: classes("board", view.highlight !== null && "highlighting"),
    viewBox: `0 0 ${px(width)} ${px(height)}`,
    width: px(width), height: px(height),
  }, children);
}

function listedPanel(sketch: SketchDoc, frame: ResultsFrame | null,
                     listed: string[]): SceneNode | null {
  if (listed.length === 0) return null;
  const excluded = new Set(frame ? frame.excluded : []);
  const smoked = new Set(frame ? frame.smoke.map((s) => s.component) : []);
  const items: SceneNode[] = [];
  for (const id of listed) {
    const doc = sketch.components.find((c) => c.id === id);
    const kind = doc ? doc.kind : "?";
    const attrs: Record<string, string> = {
      class: classes("listed-part", excluded.has(id) && "excluded"),
      "data-component": id,
    };
    if (doc && doc.kind === "switch_spst") attrs["data-toggle"] = id;
    const children: SceneNode[] = [];
    if (smoked.has(id)) {
      children.push(el("span", { class: "smoke-icon", "data-component": id },
                       [], "\u{1F4A8}"));
    }
    items.push(el("li", attrs, children, `${id} — ${kind}`));
  }
  return el("div", { class: "listed" }, [
    el("h2", {}, [], "Parts without a board position"),
    el("ul", {}, items),
  ]);
}

function readingsPanel(frame: ResultsFrame | null): SceneNode {
  const rows: SceneNode[] = [];
  if (frame) {
    for (const reading of frame.readings) {
      rows.push(el("div", { class: "reading", "data-meter": reading.meter }, [
        el("span", { class: "meter-id" }, [], reading.meter),
        // Byte-identical server text; the client never reformats it.
        el("span", {
          class: "lcd", "data-meter": reading.meter,
          "data-status": reading.status,
        }, [], reading.display),
      ]));
    }
  }
  return el("div", { class: "readings" }, rows);
}

const METER_MODES = ["V_DC", "V_AC", "A_DC", "A_AC", "OHM"];

function controlsPanel(sketch: SketchDoc): SceneNode {
  const rows: SceneNode[] = [];
  for (const part of sketch.components) {
    if (part.kind === "switch_spst") {
      const state = String(part.properties["state"] ?? "open");
      rows.push(el("div", { class: "control" }, [
        el("button", { "data-toggle": part.id, type: "button" }, [],
           `${part.id}: ${state}`),
      ]));
    } else if (part.kind === "potentiometer") {
      const position = String(part.properties["position"] ?? 0.5);
      rows.push(el("div", { class: "control" }, [
        el("label", {}, [], `${part.id} position`),
        el("input", {
          type: "range", min: "0", max: "1", step: "0.01",
          value: position, "data-pot": part.id,
        }),
      ]));
    } else if (part.kind === "multimeter") {
      const mode = String(part.properties["mode"] ?? "V_DC");
      const options = METER_MODES.map((m) => {
        const attrs: Record<string, string> = { value: m };
        if (m === mode) attrs["selected"] = "selected";
        return el("option", attrs, [], m);
      });
      rows.push(el("div", { class: "control" }, [
        el("label", {}, [], `${part.id} mode`),
        el("select", { "data-meter-mode": part.id }, options),
      ]));
    }
  }
  return el("div", { class: "controls" }, rows);
}

function locText(loc: unknown): string {
  if (typeof loc !== "object" || loc === null) return "?";
  const o = loc as Record<string, unknown>;
  if ("component" in o) return `${o["component"]}.${o["pin"]}`;
  if ("rail" in o) return `${o["board"] ?? ""}:${o["rail"]}@${o["position"]}`;
  return `${o["board"] ?? ""}:${o["column"]}${o["row"]}`;
}

function netsPanel(view: ViewState): SceneNode {
  const lines: string[] = [];
  const sketch = view.sketch;
  if (sketch) {
    for (const part of sketch.components) {
      const pins = Object.entries(part.placements)
        .map(([pin, loc]) => `${pin}=${locText(loc)}`)
        .join(" ");
      lines.push(`${part.id} ${part.kind} ${pins}`.trimEnd());
    }
    for (const wire of sketch.wires) {
      lines.push(`${wire.id} wire ${locText(wire.a)} ${locText(wire.b)}`);
    }
  }
  const frame = view.frame;
  if (frame && frame.nets) {
    lines.push("");
    for (const [net, volts] of Object.entries(frame.nets)) {
      lines.push(`net ${net}: ${volts} V`);
    }
  }
  if (frame && frame.excluded.length > 0) {
    lines.push("", `excluded: ${frame.excluded.join(", ")}`);
  }
  if (frame && frame.failure) {
    lines.push("", `solve failed: ${frame.failure.message}`);
  }
  if (view.highlight) {
    const h = view.highlight;
    lines.push("", `highlighted net ${h.net}${h.ground ? " (ground)" : ""}: `
      + h.terminals.join(", "));
  }
  return el("details", { class: "nets" }, [
    el("summary", {}, [], "Netlist"),
    el("pre", { class: "netlist" }, [], lines.join("\n")),
  ]);
}

export function renderScene(view: ViewState): SceneNode {
  const children: SceneNode[] = [];

  const statusBits: SceneNode[] = [
    el("span", { class: `status status-${view.status}` }, [],
       STATUS_TEXT[view.status] ?? view.status),
  ];
  if (view.frame) {
    statusBits.push(el("span", { class: "revision" }, [],
                       `rev ${view.frame.revision}`));
    if (!view.frame.converged) {
      statusBits.push(el("span", { class: "no-converge" }, [],
                         "did not converge"));
    }
  }
  if (view.notice) {
    statusBits.push(el("span", { class: `notice notice-${view.notice.kind}` },
                       [], view.notice.text));
  }
  children.push(el("header", { class: "status-bar" }, statusBits));

  children.push(readingsPanel(view.frame));

  if (view.sketch) {
    children.push(boardSvg(view, view.sketch));
    const listed = listedPanel(view.sketch, view.frame,
                               layoutSketch(view.sketch).listed);
    if (listed) children.push(listed);
    children.push(controlsPanel(view.sketch));
    children.push(netsPanel(view));
  } else {
    children.push(el("p", { class: "empty" }, [], "no sketch loaded"));
  }

  return el("div", { class: "lab" }, children);
}

// ---- browser mounting ------------------------------------------------------

const SVG_NS = "http://www.w3.org/2000/svg";

function build(node: SceneNode, doc: Document, inSvg: boolean): Element {
  const svg = inSvg || node.tag === "svg";
  const element = svg
    ? doc.createElementNS(SVG_NS, node.tag)
    : doc.createElement(node.tag);
  for (const [name, value] of Object.entries(node.attrs)) {
    element.setAttribute(name, value);
  }
  if (node.text !== undefined) element.textContent = node.text;
  for (const child of node.children) {
    element.appendChild(build(child, doc, svg));
  }
  return element;
}

/** Replace the container's content with the rendered scene. */
export function mount(scene: SceneNode, container: Element): void {
  const doc = container.ownerDocument;
  const built = build(scene, doc, false);
  container.replaceChildren(built);
}
