"""Sketch JSON reading/writing, netlist export, and run reports.

The on-disk sketch format is strict: unknown fields are rejected rather
than ignored, so a typo like "postion" fails loudly instead of silently
simulating the default. Parsing collects every schema problem it can
before raising, each tagged with a JSON-ish path.

Rail names use a Unicode minus in their canonical spelling; the parser
also accepts the ASCII hyphen form and normalizes it.
"""

from __future__ import annotations

import json

from .core import (
    RAIL_TAGS,
    BreadboardSpec,
    ComponentInstance,
    Diagnostic,
    HoleLocation,
    Location,
    NetMap,
    RailLocation,
    Sketch,
    Terminal,
    TerminalLocation,
    Wire,
    extract_nets,
)
from .devices import potentiometer_split, property_value
from .errors import SketchFormatError

FORMAT_VERSION = 1

_ROOT_FIELDS = {"format_version", "name", "breadboards", "components", "wires"}
_BOARD_FIELDS = {"id", "columns"}
_COMPONENT_FIELDS = {"id", "kind", "properties", "placements"}
_WIRE_FIELDS = {"id", "a", "b"}

# ASCII-hyphen aliases of the canonical rail tags
_RAIL_ALIASES = {tag.replace("−", "-"): tag for tag in RAIL_TAGS}


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class _Collector:
    def __init__(self):
        self.diags: list[Diagnostic] = []

    def err(self, path: str, message: str):
        self.diags.append(Diagnostic("SCHEMA_ERROR", path, message))

    def unknown_fields(self, obj: dict, allowed: set, path: str):
        for key in sorted(set(obj) - allowed):
            self.err(f"{path}.{key}" if path else key, "unknown field")

    def require_str(self, obj: dict, key: str, path: str) -> str | None:
        value = obj.get(key)
        if isinstance(value, str) and value:
            return value
        self.err(f"{path}.{key}" if path else key,
                 "required non-empty string" if value is None or value == ""
                 else f"expected string, got {type(value).__name__}")
        return None


def _parse_board(item, path: str, col: _Collector) -> BreadboardSpec | None:
    if not isinstance(item, dict):
        col.err(path, "breadboard must be an object")
        return None
    col.unknown_fields(item, _BOARD_FIELDS, path)
    board_id = col.require_str(item, "id", path)
    columns = item.get("columns", 63)
    if not _is_int(columns) or columns < 1:
        col.err(f"{path}.columns", "columns must be a positive integer")
        return None
    if board_id is None:
        return None
    return BreadboardSpec(board_id, columns)


def _default_board(boards: list, path: str, col: _Collector) -> str | None:
    if len(boards) == 1:
        return boards[0].board_id
    col.err(f"{path}.board",
            "board is required when the sketch does not have exactly one breadboard")
    return None


def _parse_location(obj, path: str, boards: list, col: _Collector) -> Location | None:
    if not isinstance(obj, dict):
        col.err(path, "location must be an object")
        return None
    if "component" in obj:
        col.unknown_fields(obj, {"component", "pin"}, path)
        component = col.require_str(obj, "component", path)
        pin = col.require_str(obj, "pin", path)
        if component is None or pin is None:
            return None
        return TerminalLocation(Terminal(component, pin))
    if "rail" in obj:
        col.unknown_fields(obj, {"rail", "position", "board"}, path)
        rail = col.require_str(obj, "rail", path)
        position = obj.get("position")
        if not _is_int(position):
            col.err(f"{path}.position", "position must be an integer")
            return None
        board = obj.get("board")
        if board is not None and not isinstance(board, str):
            col.err(f"{path}.board", "board must be a string")
            return None
        if board is None:
            board = _default_board(boards, path, col)
        if rail is None or board is None:
            return None
        return RailLocation(board, _RAIL_ALIASES.get(rail, rail), position)
    if "column" in obj or "row" in obj:
        col.unknown_fields(obj, {"board", "column", "row"}, path)
        column = obj.get("column")
        if not _is_int(column):
            col.err(f"{path}.column", "column must be an integer")
            return None
        row = obj.get("row")
        if not isinstance(row, str) or len(row) != 1:
            col.err(f"{path}.row", "row must be a single letter")
            return None
        board = obj.get("board")
        if board is not None and not isinstance(board, str):
            col.err(f"{path}.board", "board must be a string")
            return None
        if board is None:
            board = _default_board(boards, path, col)
        if board is None:
            return None
        return HoleLocation(board, column, row)
    col.err(path, "location needs component/pin, rail/position, or column/row")
    return None


def _parse_component(item, path: str, boards: list,
                     col: _Collector) -> ComponentInstance | None:
    if not isinstance(item, dict):
        col.err(path, "component must be an object")
        return None
    col.unknown_fields(item, _COMPONENT_FIELDS, path)
    comp_id = col.require_str(item, "id", path)
    kind = col.require_str(item, "kind", path)

    properties = {}
    raw_props = item.get("properties", {})
    if not isinstance(raw_props, dict):
        col.err(f"{path}.properties", "properties must be an object")
    else:
        for key, value in raw_props.items():
            if isinstance(value, (str, bool)) or _is_int(value) \
                    or isinstance(value, float):
                properties[key] = value
            else:
                col.err(f"{path}.properties.{key}",
                        "property values must be numbers, strings, or booleans")

    placements = {}
    raw_places = item.get("placements", {})
    if not isinstance(raw_places, dict):
        col.err(f"{path}.placements", "placements must be an object")
    else:
        for pin, raw_loc in raw_places.items():
            loc = _parse_location(raw_loc, f"{path}.placements.{pin}",
                                  boards, col)
            if loc is not None:
                placements[pin] = loc

    if comp_id is None or kind is None:
        return None
    return ComponentInstance(comp_id, kind, properties, placements)


def _parse_wire(item, path: str, boards: list, col: _Collector) -> Wire | None:
    if not isinstance(item, dict):
        col.err(path, "wire must be an object")
        return None
    col.unknown_fields(item, _WIRE_FIELDS, path)
    wire_id = col.require_str(item, "id", path)
    a = _parse_location(item.get("a"), f"{path}.a", boards, col)
    b = _parse_location(item.get("b"), f"{path}.b", boards, col)
    if wire_id is None or a is None or b is None:
        return None
    return Wire(wire_id, a, b)


def sketch_from_json(raw) -> tuple:
    """Build a Sketch from decoded JSON; returns (sketch, diagnostics)."""
    col = _Collector()
    if not isinstance(raw, dict):
        col.err("", "top level must be an object")
        return Sketch(), col.diags
    col.unknown_fields(raw, _ROOT_FIELDS, "")
    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        col.err("format_version",
                f"unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    name = raw.get("name", "")
    if not isinstance(name, str):
        col.err("name", "name must be a string")
        name = ""

    def seq(key):
        value = raw.get(key, [])
        if isinstance(value, list):
            return value
        col.err(key, f"{key} must be an array")
        return []

    boards = []
    for i, item in enumerate(seq("breadboards")):
        board = _parse_board(item, f"breadboards[{i}]", col)
        if board is not None:
            boards.append(board)
    components = []
    for i, item in enumerate(seq("components")):
        comp = _parse_component(item, f"components[{i}]", boards, col)
        if comp is not None:
            components.append(comp)
    wires = []
    for i, item in enumerate(seq("wires")):
        wire = _parse_wire(item, f"wires[{i}]", boards, col)
        if wire is not None:
            wires.append(wire)
    return Sketch(name, boards, components, wires), col.diags


def parse_sketch(text: str) -> Sketch:
    """Parse sketch JSON text; raises SketchFormatError on any problem."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SketchFormatError([Diagnostic(
            "PARSE_ERROR", f"line {exc.lineno} column {exc.colno}", exc.msg)])
    sketch, diags = sketch_from_json(raw)
    if diags:
        raise SketchFormatError(diags)
    return sketch


def parse_location(obj, boards: list, path: str = "location") -> tuple:
    """Parse one location object; returns (location | None, diagnostics)."""
    col = _Collector()
    loc = _parse_location(obj, path, boards, col)
    return loc, col.diags


def location_to_json(loc: Location) -> dict:
    if isinstance(loc, HoleLocation):
        return {"board": loc.board_id, "column": loc.column, "row": loc.row}
    if isinstance(loc, RailLocation):
        return {"board": loc.board_id, "rail": loc.rail, "position": loc.position}
    return {"component": loc.terminal.component_id, "pin": loc.terminal.pin_name}


def sketch_to_json(sketch: Sketch) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "name": sketch.name,
        "breadboards": [{"id": b.board_id, "columns": b.columns}
                        for b in sketch.breadboards],
        "components": [
            {
                "id": c.id,
                "kind": c.kind,
                "properties": {k: c.properties[k] for k in sorted(c.properties)},
                "placements": {pin: location_to_json(loc)
                               for pin, loc in sorted(c.placements.items())},
            }
            for c in sketch.components
        ],
        "wires": [{"id": w.id, "a": location_to_json(w.a),
                   "b": location_to_json(w.b)} for w in sketch.wires],
    }


def serialize_sketch(sketch: Sketch) -> str:
    return json.dumps(sketch_to_json(sketch), indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# netlist export

_SPICE_SUFFIXES = ((1e6, "MEG"), (1e3, "k"), (1.0, ""),
                   (1e-3, "m"), (1e-6, "u"), (1e-9, "n"), (1e-12, "p"))


def format_spice_value(value: float) -> str:
    """Engineering-notation value with the usual netlist suffixes.

    Magnitudes below pico fall back to plain scientific notation, which
    every reader accepts.
    """
    if value == 0:
        return "0"
    mag = abs(value)
    for scale, suffix in _SPICE_SUFFIXES:
        if mag >= scale:
            return f"{value / scale:.6g}{suffix}"
    return f"{value:.6g}"


def _element_name(prefix: str, component_id: str) -> str:
    if component_id[:1].upper() == prefix:
        return component_id
    return prefix + component_id


def export_netlist(sketch: Sketch, netmap: NetMap | None = None) -> str:
    """Flat DC netlist of the sketch as currently configured.

    Ground nets become node 0; the rest are numbered N001.. in net order.
    Switches export their present contact state, potentiometers export
    their two track halves, and parts with no netlist-expressible model
    (gates, sensors, meters, boards) become skipped-comments so nothing
    disappears silently.
    """
    if netmap is None:
        netmap = extract_nets(sketch)
    names = {}
    counter = 0
    for net in netmap.nets:
        if net.is_ground:
            names[net.net_id] = "0"
        else:
            counter += 1
            names[net.net_id] = f"N{counter:03d}"

    lines = [f"* circsim {sketch.name}"]
    models = {}
    for comp in sorted(sketch.components, key=lambda c: c.id):
        def nn(pin):
            return names[netmap.net_id_of(comp.terminal(pin))]

        kind = comp.kind
        if kind == "ground":
            continue
        if kind == "resistor":
            lines.append(f"{_element_name('R', comp.id)} {nn('1')} {nn('2')} "
                         f"{format_spice_value(float(property_value(comp, 'resistance')))}")
        elif kind == "dc_motor":
            lines.append(f"{_element_name('R', comp.id)} {nn('1')} {nn('2')} "
                         f"{format_spice_value(float(property_value(comp, 'winding_resistance')))}")
        elif kind == "potentiometer":
            ra, rb = potentiometer_split(comp)
            lines.append(f"{_element_name('R', comp.id + '_A')} {nn('1')} "
                         f"{nn('wiper')} {format_spice_value(ra)}")
            lines.append(f"{_element_name('R', comp.id + '_B')} {nn('wiper')} "
                         f"{nn('2')} {format_spice_value(rb)}")
        elif kind in ("battery", "dc_supply"):
            volts = format_spice_value(float(property_value(comp, "voltage")))
            rint = float(property_value(comp, "internal_resistance"))
            if rint == 0:
                lines.append(f"{_element_name('V', comp.id)} {nn('+')} {nn('-')} "
                             f"DC {volts}")
            else:
                internal = f"{comp.id}_INT"
                lines.append(f"{_element_name('V', comp.id)} {internal} {nn('-')} "
                             f"DC {volts}")
                lines.append(f"{_element_name('R', comp.id + '_INT')} {nn('+')} "
                             f"{internal} {format_spice_value(rint)}")
        elif kind == "switch_spst":
            if property_value(comp, "state") == "closed":
                lines.append(f"{_element_name('R', comp.id)} {nn('1')} {nn('2')} 1m")
            else:
                lines.append(f"* skipped {comp.id} (switch_spst open)")
        elif kind == "switch_spdt":
            sel = str(property_value(comp, "selected"))
            lines.append(f"{_element_name('R', comp.id)} {nn('com')} {nn(sel)} 1m")
        elif kind in ("diode", "led"):
            model = f"D_{comp.id}"
            isat = format_spice_value(float(property_value(comp, "saturation_current")))
            ncoef = format_spice_value(float(property_value(comp, "emission_coefficient")))
            lines.append(f"{_element_name('D', comp.id)} {nn('anode')} "
                         f"{nn('cathode')} {model}")
            models[model] = f".model {model} D(IS={isat} N={ncoef})"
        elif kind in ("ceramic_capacitor", "electrolytic_capacitor",
                      "tantalum_capacitor"):
            pins = ("1", "2") if kind == "ceramic_capacitor" else ("+", "-")
            lines.append(f"{_element_name('C', comp.id)} {nn(pins[0])} {nn(pins[1])} "
                         f"{format_spice_value(float(property_value(comp, 'capacitance')))}")
        elif kind == "inductor":
            lines.append(f"{_element_name('L', comp.id)} {nn('1')} {nn('2')} "
                         f"{format_spice_value(float(property_value(comp, 'inductance')))}")
        elif kind == "bjt_npn":
            model = f"Q_{comp.id}"
            lines.append(f"{_element_name('Q', comp.id)} {nn('collector')} "
                         f"{nn('base')} {nn('emitter')} {model}")
            models[model] = (
                f".model {model} NPN("
                f"IS={format_spice_value(float(property_value(comp, 'saturation_current')))} "
                f"BF={format_spice_value(float(property_value(comp, 'forward_beta')))} "
                f"BR={format_spice_value(float(property_value(comp, 'reverse_beta')))})")
        elif kind == "nmos":
            model = f"M_{comp.id}"
            lines.append(f"{_element_name('M', comp.id)} {nn('drain')} {nn('gate')} "
                         f"{nn('source')} {nn('source')} {model}")
            models[model] = (
                f".model {model} NMOS("
                f"VTO={format_spice_value(float(property_value(comp, 'threshold_voltage')))} "
                f"KP={format_spice_value(float(property_value(comp, 'transconductance')))})")
        else:
            lines.append(f"* skipped {comp.id} ({kind})")
    lines.extend(models[name] for name in sorted(models))
    lines.append(".op")
    lines.append(".end")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# run report

def render_report(result) -> str:
    """Human-readable text report for one simulation result."""
    lines = [f"sketch {result.sketch.name or '(unnamed)'}"]
    sol = result.solution
    if result.converged:
        lines.append(f"solved strategy={sol.strategy} iterations={sol.iterations}")
    elif result.failure is not None:
        lines.append(f"failed {result.failure['code']}: {result.failure['message']}")
    else:
        lines.append("failed")
    for net in result.netmap.nets:
        terms = " ".join(sorted(f"{t.component_id}.{t.pin_name}"
                                for t in net.terminals))
        tag = " ground" if net.is_ground else ""
        if sol is not None:
            lines.append(f"net {net.net_id}{tag}: "
                         f"{sol.node_voltages[net.net_id]:.6g} V  [{terms}]")
        else:
            lines.append(f"net {net.net_id}{tag}: -  [{terms}]")
    if sol is not None:
        for cid, state in sorted(sol.element_states.items()):
            if state.excluded:
                lines.append(f"excluded {cid} ({state.kind})")
    for reading in result.readings:
        lines.append(f"meter {reading.meter_id}: {reading.display}")
    for event in result.smoke_events:
        lines.append(event.text_line())
    return "\n".join(lines) + "\n"


def render_report_json(result) -> str:
    return json.dumps(result.as_json(), indent=2, ensure_ascii=False,
                      sort_keys=False) + "\n"
