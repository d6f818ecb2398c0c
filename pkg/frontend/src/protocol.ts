/**
 * Wire protocol of the lab service.
 *
 * Document shapes mirror the server's sketch JSON, frames mirror its
 * websocket broadcasts, and the op builders below are the only place
 * the client constructs outgoing messages, so nothing undocumented can
 * ever go over the wire.
 */

export type HoleLoc = { board?: string; column: number; row: string };
export type RailLoc = { board?: string; rail: string; position: number };
export type TerminalLoc = { component: string; pin: string };
export type Location = HoleLoc | RailLoc | TerminalLoc;

export function isTerminalLoc(loc: Location): loc is TerminalLoc {
  return "component" in loc;
}

export function isRailLoc(loc: Location): loc is RailLoc {
  return "rail" in loc;
}

export type PropertyValue = number | string | boolean;

export interface BreadboardDoc {
  id: string;
  columns: number;
}

export interface ComponentDoc {
  id: string;
  kind: string;
  properties: Record<string, PropertyValue>;
  placements: Record<string, Location>;
}

export interface WireDoc {
  id: string;
  a: Location;
  b: Location;
}

export interface SketchDoc {
  format_version: 1;
  name: string;
  breadboards: BreadboardDoc[];
  components: ComponentDoc[];
  wires: WireDoc[];
}

/** Meter reading as broadcast; `display` is the LCD string verbatim. */
export interface ReadingDoc {
  meter: string;
  status: string;
  display: string;
  value?: number;
}

export interface SmokeDoc {
  component: string;
  kind: string;
  measured: number;
  limit: number;
  pin?: string;
}

export interface DiagnosticDoc {
  code: string;
  subject: string;
  message: string;
}

export interface ResultsFrame {
  type: "results";
  revision: number;
  name: string;
  converged: boolean;
  readings: ReadingDoc[];
  smoke: SmokeDoc[];
  excluded: string[];
  nets?: Record<string, number>;
  strategy?: string;
  iterations?: number;
  failure?: { code: string; message: string };
}

export interface HighlightFrame {
  type: "highlight";
  revision: number;
  net: number;
  ground: boolean;
  terminals: string[];
}

export interface RejectedFrame {
  type: "rejected";
  revision: number;
  op: string | null;
  errors: DiagnosticDoc[];
}

export type Frame = ResultsFrame | HighlightFrame | RejectedFrame;

const FRAME_TYPES = new Set(["results", "highlight", "rejected"]);

/** Decode one websocket message; null for anything malformed. */
export function parseFrame(data: unknown): Frame | null {
  if (typeof data !== "string") return null;
  let raw: unknown;
  try {
    raw = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const frame = raw as { type?: unknown; revision?: unknown };
  if (typeof frame.type !== "string" || !FRAME_TYPES.has(frame.type)) {
    return null;
  }
  if (typeof frame.revision !== "number") return null;
  return raw as Frame;
}

// ---- outgoing operations ---------------------------------------------------

export type Op =
  | { op: "load"; sketch: SketchDoc }
  | { op: "set_property"; component: string; name: string; value: PropertyValue }
  | { op: "toggle_switch"; component: string }
  | { op: "set_pot"; component: string; position: number }
  | { op: "set_meter_mode"; component: string; mode: string }
  | { op: "move_probe"; component: string; pin: string; to: Location | null }
  | { op: "add_wire"; id: string; a: Location; b: Location }
  | { op: "remove_wire"; id: string }
  | { op: "highlight"; component: string; pin: string };

export function loadSketch(sketch: SketchDoc): Op {
  return { op: "load", sketch };
}

export function setProperty(component: string, name: string,
                            value: PropertyValue): Op {
  return { op: "set_property", component, name, value };
}

export function toggleSwitch(component: string): Op {
  return { op: "toggle_switch", component };
}

export function setPot(component: string, position: number): Op {
  return { op: "set_pot", component, position };
}

export function setMeterMode(component: string, mode: string): Op {
  return { op: "set_meter_mode", component, mode };
}

export function moveProbe(component: string, pin: string,
                          to: Location | null): Op {
  return { op: "move_probe", component, pin, to };
}

export function addWire(id: string, a: Location, b: Location): Op {
  return { op: "add_wire", id, a, b };
}

export function removeWire(id: string): Op {
  return { op: "remove_wire", id };
}

export function highlight(component: string, pin: string): Op {
  return { op: "highlight", component, pin };
}

export function encodeOp(op: Op): string {
  return JSON.stringify(op);
}
