/**
 * Pure breadboard geometry.
 *
 * Turns a sketch document into grid coordinates: every hole or rail
 * position maps to a cell, electrically tied cells share a key exactly
 * the way the simulator groups them (whole rail; column split into the
 * a-e and f-j halves), and terminal-to-terminal placements are chased
 * to the physical spot they ultimately sit on. Parts whose pins cannot
 * all be placed fall back to a plain list so the page still degrades
 * usefully when a sketch has no geometry at all.
 */

import {
  ComponentDoc,
  Location,
  SketchDoc,
  isRailLoc,
  isTerminalLoc,
} from "./protocol.js";

export const ROWS = "abcdefghij";
export const RAILS = ["V+top", "V−top", "V+bot", "V−bot"] as const;

const ROW_Y: Record<string, number> = {
  "V+top": 0,
  "V−top": 1,
  a: 3, b: 4, c: 5, d: 6, e: 7,
  f: 9, g: 10, h: 11, i: 12, j: 13,
  "V+bot": 15,
  "V−bot": 16,
};

export const GRID_ROWS = 17;

export interface Spot {
  board: string;
  x: number;
  y: number;
  tie: string;
}

export interface PinLayout extends Spot {
  pin: string;
}

export interface PartLayout {
  id: string;
  kind: string;
  board: string;
  pins: PinLayout[];
  /** Label anchor at the pin centroid. */
  x: number;
  y: number;
}

export interface WireLayout {
  id: string;
  a: Spot;
  b: Spot;
}

export interface BoardLayout {
  id: string;
  columns: number;
}

export interface Layout {
  boards: BoardLayout[];
  parts: PartLayout[];
  wires: WireLayout[];
  /** Component ids with no usable geometry, in sketch order. */
  listed: string[];
}

/** Electrical tie key, matching the simulator's grouping. */
export function tieKey(board: string, loc: Location): string | null {
  if (isTerminalLoc(loc)) return null;
  if (isRailLoc(loc)) {
    return `${board}:rail:${loc.rail}`;
  }
  const half = "abcde".includes(loc.row) ? "ae" : "fj";
  return `${board}:${loc.column}:${half}`;
}

function defaultBoard(sketch: SketchDoc): string | null {
  return sketch.breadboards.length === 1 ? sketch.breadboards[0]!.id : null;
}

function physicalSpot(sketch: SketchDoc, loc: Location): Spot | null {
  if (isTerminalLoc(loc)) return null;
  const board = loc.board ?? defaultBoard(sketch);
  if (board === null) return null;
  if (isRailLoc(loc)) {
    const y = ROW_Y[loc.rail];
    if (y === undefined) return null;
    return { board, x: loc.position, y, tie: `${board}:rail:${loc.rail}` };
  }
  const y = ROW_Y[loc.row];
  if (y === undefined) return null;
  const half = "abcde".includes(loc.row) ? "ae" : "fj";
  return { board, x: loc.column, y, tie: `${board}:${loc.column}:${half}` };
}

/**
 * Chase a placement to its physical spot.
 *
 * Terminal placements may point at other terminal placements; follow
 * the chain with a visited set so a cycle resolves to nothing rather
 * than hanging.
 */
export function resolveSpot(sketch: SketchDoc, loc: Location,
                            visited?: Set<string>): Spot | null {
  if (!isTerminalLoc(loc)) {
    return physicalSpot(sketch, loc);
  }
  const seen = visited ?? new Set<string>();
  const key = `${loc.component}.${loc.pin}`;
  if (seen.has(key)) return null;
  seen.add(key);
  const target = sketch.components.find((c) => c.id === loc.component);
  if (!target) return null;
  const next = target.placements[loc.pin];
  if (!next) return null;
  return resolveSpot(sketch, next, seen);
}

function layoutPart(sketch: SketchDoc, part: ComponentDoc): PartLayout | null {
  // A pin that never reaches board geometry (a jack parked on itself,
  // say) is simply not drawn; the part stays on the grid as long as
  // anything resolves. Zero resolvable pins means list fallback.
  const pins: PinLayout[] = [];
  for (const pin of Object.keys(part.placements)) {
    const spot = resolveSpot(sketch, part.placements[pin]!);
    if (spot) pins.push({ pin, ...spot });
  }
  if (pins.length === 0) return null;
  const x = pins.reduce((s, p) => s + p.x, 0) / pins.length;
  const y = pins.reduce((s, p) => s + p.y, 0) / pins.length;
  return { id: part.id, kind: part.kind, board: pins[0]!.board, pins, x, y };
}

export function layoutSketch(sketch: SketchDoc): Layout {
  const boards = sketch.breadboards.map((b) => ({ id: b.id, columns: b.columns }));
  const parts: PartLayout[] = [];
  const listed: string[] = [];
  for (const part of sketch.components) {
    const placed = layoutPart(sketch, part);
    if (placed) {
      parts.push(placed);
    } else {
      listed.push(part.id);
    }
  }
  const wires: WireLayout[] = [];
  for (const wire of sketch.wires) {
    const a = resolveSpot(sketch, wire.a);
    const b = resolveSpot(sketch, wire.b);
    if (a && b) wires.push({ id: wire.id, a, b });
  }
  return { boards, parts, wires, listed };
}
