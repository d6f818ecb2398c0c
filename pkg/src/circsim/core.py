"""Circuit document model, breadboard geometry, and net extraction.

A Sketch describes one lab bench: breadboards, component instances with
their pin placements, and wires. Electrical connectivity is resolved by
``extract_nets``, which partitions terminals into nets by union-find over
wires plus the boards' internal tie-point groups.

Pure data and graph logic only; no device physics and no I/O here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownTerminalError

ROW_LETTERS = "abcdefghij"
RAIL_TAGS = ("V+top", "V−top", "V+bot", "V−bot")
RAIL_POSITIONS = 50


@dataclass(frozen=True, order=True)
class Terminal:
    """One electrical connection point of a component instance."""

    component_id: str
    pin_name: str


@dataclass(frozen=True)
class HoleLocation:
    """A plug point in the main grid of a breadboard (rows a..j)."""

    board_id: str
    column: int
    row: str


@dataclass(frozen=True)
class RailLocation:
    """A plug point on one of the four continuous power rails."""

    board_id: str
    rail: str
    position: int


@dataclass(frozen=True)
class TerminalLocation:
    """Direct attachment to another terminal (probe clip / schematic wiring).

    A pin placed at its own terminal is a free-floating pin: it connects
    to nothing until a wire reaches it.
    """

    terminal: Terminal


Location = HoleLocation | RailLocation | TerminalLocation


@dataclass(frozen=True)
class BreadboardSpec:
    """Geometry of one solderless breadboard.

    Rows a-e and f-j of each column form two independent tie-point groups.
    Each of the four power rails is one continuous group over positions
    1..50, regardless of column count.
    """

    board_id: str
    columns: int = 63

    def tie_group(self, loc: HoleLocation | RailLocation) -> tuple:
        if isinstance(loc, RailLocation):
            return (self.board_id, loc.rail)
        half = "ae" if loc.row in "abcde" else "fj"
        return (self.board_id, loc.column, half)


@dataclass
class ComponentInstance:
    """One placed part: id, kind, property overrides, pin placements."""

    id: str
    kind: str
    properties: dict = field(default_factory=dict)
    placements: dict = field(default_factory=dict)

    def terminal(self, pin_name: str) -> Terminal:
        return Terminal(self.id, pin_name)


@dataclass(frozen=True)
class Wire:
    id: str
    a: Location
    b: Location


@dataclass
class Sketch:
    """A complete bench document. Treat as immutable after construction;
    mutations build a new Sketch (see service helpers)."""

    name: str = ""
    breadboards: list = field(default_factory=list)
    components: list = field(default_factory=list)
    wires: list = field(default_factory=list)

    def board(self, board_id: str) -> BreadboardSpec | None:
        for b in self.breadboards:
            if b.board_id == board_id:
                return b
        return None

    def component(self, component_id: str) -> ComponentInstance | None:
        for c in self.components:
            if c.id == component_id:
                return c
        return None

    def wire(self, wire_id: str) -> Wire | None:
        for w in self.wires:
            if w.id == wire_id:
                return w
        return None

    def terminals(self):
        for comp in self.components:
            for pin in comp.placements:
                yield Terminal(comp.id, pin)


@dataclass(frozen=True)
class Net:
    """A maximal set of terminals joined by wires and tie-point groups."""

    net_id: int
    terminals: frozenset
    is_ground: bool = False


@dataclass
class NetMap:
    """Extraction result: nets numbered from 1, plus a terminal index."""

    nets: list
    terminal_index: dict

    def net_of(self, terminal: Terminal) -> Net:
        try:
            return self.nets[self.terminal_index[terminal] - 1]
        except KeyError:
            raise UnknownTerminalError(
                f"terminal {terminal.component_id}.{terminal.pin_name} "
                "is not part of this sketch",
                subject=terminal,
            ) from None

    def net_id_of(self, terminal: Terminal) -> int:
        return self.net_of(terminal).net_id

    def is_singleton(self, terminal: Terminal) -> bool:
        return len(self.net_of(terminal).terminals) == 1


@dataclass(frozen=True)
class Diagnostic:
    """One validation or parse problem, machine-readable."""

    code: str
    subject: str
    message: str

    def as_json(self) -> dict:
        return {"code": self.code, "subject": self.subject, "message": self.message}


class UnionFind:
    """Disjoint sets with path compression; keys may be any hashable."""

    def __init__(self):
        self.parent = {}

    def add(self, key):
        if key not in self.parent:
            self.parent[key] = key

    def find(self, key):
        root = key
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[key] != root:
            self.parent[key], key = root, self.parent[key]
        return root

    def union(self, a, b):
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def validate_sketch(sketch: Sketch) -> list:
    """Check document invariants; returns diagnostics (empty when valid).

    Codes: DUP_ID, BAD_PIN, HOLE_CONFLICT, BAD_PROPERTY, DANGLING_REF.
    """
    from . import devices  # local import: core stays importable from devices

    out: list[Diagnostic] = []

    seen_boards: set[str] = set()
    for b in sketch.breadboards:
        if b.board_id in seen_boards:
            out.append(Diagnostic("DUP_ID", b.board_id, f"duplicate breadboard id {b.board_id!r}"))
        seen_boards.add(b.board_id)

    seen_components: set[str] = set()
    for comp in sketch.components:
        if comp.id in seen_components:
            out.append(Diagnostic("DUP_ID", comp.id, f"duplicate component id {comp.id!r}"))
        seen_components.add(comp.id)

    seen_wires: set[str] = set()
    for w in sketch.wires:
        if w.id in seen_wires:
            out.append(Diagnostic("DUP_ID", w.id, f"duplicate wire id {w.id!r}"))
        seen_wires.add(w.id)

    known_terminals = {t for t in sketch.terminals()}

    def check_location(loc: Location, subject: str) -> None:
        if isinstance(loc, TerminalLocation):
            if loc.terminal not in known_terminals:
                out.append(Diagnostic(
                    "DANGLING_REF", subject,
                    "reference to unknown terminal "
                    f"{loc.terminal.component_id}.{loc.terminal.pin_name}"))
            return
        board = sketch.board(loc.board_id)
        if board is None:
            out.append(Diagnostic(
                "DANGLING_REF", subject,
                f"unknown breadboard {loc.board_id!r}"))
            return
        if isinstance(loc, RailLocation):
            if loc.rail not in RAIL_TAGS:
                out.append(Diagnostic(
                    "DANGLING_REF", subject,
                    f"unknown rail tag {loc.rail!r}"))
            if not 1 <= loc.position <= RAIL_POSITIONS:
                out.append(Diagnostic(
                    "DANGLING_REF", subject,
                    f"rail position {loc.position} outside 1..{RAIL_POSITIONS}"))
        else:
            if loc.row not in ROW_LETTERS:
                out.append(Diagnostic(
                    "DANGLING_REF", subject,
                    f"row {loc.row!r} is not a..j"))
            if not 1 <= loc.column <= board.columns:
                out.append(Diagnostic(
                    "DANGLING_REF", subject,
                    f"column {loc.column} outside 1..{board.columns}"))

    hole_owner: dict[tuple, Terminal] = {}
    for comp in sketch.components:
        descriptor = devices.descriptor_for(comp)
        declared = set(descriptor.pins)
        placed = set(comp.placements)
        for pin in sorted(placed - declared):
            out.append(Diagnostic(
                "BAD_PIN", comp.id,
                f"kind {comp.kind!r} has no pin {pin!r}"))
        for pin in sorted(declared - placed):
            out.append(Diagnostic(
                "BAD_PIN", comp.id,
                f"pin {pin!r} has no placement"))

        if descriptor.simulatable:
            specs = {p.name: p for p in descriptor.properties}
            for name, value in comp.properties.items():
                spec = specs.get(name)
                if spec is None:
                    out.append(Diagnostic(
                        "BAD_PROPERTY", comp.id,
                        f"kind {comp.kind!r} has no property {name!r}"))
                    continue
                if spec.choices is not None:
                    if value not in spec.choices:
                        out.append(Diagnostic(
                            "BAD_PROPERTY", comp.id,
                            f"{name} must be one of {spec.choices}, got {value!r}"))
                    continue
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    out.append(Diagnostic(
                        "BAD_PROPERTY", comp.id,
                        f"{name} must be a number, got {value!r}"))
                    continue
                if spec.minimum is not None and value < spec.minimum:
                    out.append(Diagnostic(
                        "BAD_PROPERTY", comp.id,
                        f"{name}={value} below minimum {spec.minimum}"))
                if spec.maximum is not None and value > spec.maximum:
                    out.append(Diagnostic(
                        "BAD_PROPERTY", comp.id,
                        f"{name}={value} above maximum {spec.maximum}"))

        for pin, loc in comp.placements.items():
            check_location(loc, comp.id)
            if isinstance(loc, (HoleLocation, RailLocation)):
                board = sketch.board(loc.board_id)
                if board is None:
                    continue
                key = _hole_key(loc)
                other = hole_owner.get(key)
                if other is not None and other != Terminal(comp.id, pin):
                    out.append(Diagnostic(
                        "HOLE_CONFLICT", comp.id,
                        f"{comp.id}.{pin} occupies the same hole as "
                        f"{other.component_id}.{other.pin_name}"))
                else:
                    hole_owner[key] = Terminal(comp.id, pin)

    for w in sketch.wires:
        check_location(w.a, w.id)
        check_location(w.b, w.id)
        if w.a == w.b:
            out.append(Diagnostic(
                "HOLE_CONFLICT", w.id,
                f"wire {w.id} connects a location to itself"))

    return out


def _hole_key(loc: HoleLocation | RailLocation) -> tuple:
    if isinstance(loc, RailLocation):
        return (loc.board_id, loc.rail, loc.position)
    return (loc.board_id, loc.column, loc.row)


def extract_nets(sketch: Sketch) -> NetMap:
    """Partition all terminals into nets.

    Two terminals share a net iff they are connected through any chain of
    wires and/or shared tie-point groups. Every terminal appears in the
    result, unconnected ones as singleton nets. Net ids are assigned from
    1 in order of each net's lexicographically smallest
    (component_id, pin_name) member, so numbering is insensitive to
    component and wire list order.

    Precondition: ``validate_sketch`` returned no diagnostics.
    """
    dsu = UnionFind()
    boards = {b.board_id: b for b in sketch.breadboards}

    def anchor(loc: Location, own: Terminal):
        """Key the location resolves to for connectivity purposes."""
        if isinstance(loc, TerminalLocation):
            return ("t", loc.terminal)
        return ("g", boards[loc.board_id].tie_group(loc))

    terminals = []
    for comp in sketch.components:
        for pin, loc in comp.placements.items():
            t = Terminal(comp.id, pin)
            terminals.append(t)
            dsu.add(("t", t))
            dsu.union(("t", t), anchor(loc, t))

    for w in sketch.wires:
        dsu.union(anchor(w.a, None), anchor(w.b, None))

    groups: dict = {}
    for t in terminals:
        groups.setdefault(dsu.find(("t", t)), []).append(t)

    grounded_roots = {
        dsu.find(("t", Terminal(comp.id, pin)))
        for comp in sketch.components if comp.kind == "ground"
        for pin in comp.placements
    }

    keyed = sorted(
        (min((t.component_id, t.pin_name) for t in members), root, members)
        for root, members in groups.items()
    )
    nets = []
    terminal_index: dict[Terminal, int] = {}
    for i, (_key, root, members) in enumerate(keyed, start=1):
        nets.append(Net(i, frozenset(members), is_ground=root in grounded_roots))
        for t in members:
            terminal_index[t] = i
    return NetMap(nets=nets, terminal_index=terminal_index)


def net_of_terminal(netmap: NetMap, terminal: Terminal) -> set:
    """All terminals electrically tied to ``terminal`` (itself included)."""
    return set(netmap.net_of(terminal).terminals)
