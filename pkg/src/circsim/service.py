"""Live lab service: sessions over HTTP, edit operations over WebSocket.

Each session holds one revision-stamped sketch. Edit operations either
commit (revision bumps by one) or are rejected with diagnostics and
leave the sketch untouched; there are no partial applies. Result frames
are produced by a per-session worker that debounces for a few tens of
milliseconds, so a burst of knob twiddling costs one solve, and the
revision numbers on outgoing frames never decrease.

The op protocol (client to server, JSON):
    {"op": "load", "sketch": {...}}
    {"op": "set_property", "component": id, "name": prop, "value": v}
    {"op": "toggle_switch", "component": id}
    {"op": "set_pot", "component": id, "position": 0..1}
    {"op": "set_meter_mode", "component": id, "mode": "V_DC" | ...}
    {"op": "move_probe", "component": id, "pin": name, "to": loc | null}
    {"op": "add_wire", "id": wire_id, "a": loc, "b": loc}
    {"op": "remove_wire", "id": wire_id}
    {"op": "highlight", "component": id, "pin": name}

Server to client frames: "results", "highlight", "rejected".
"""

from __future__ import annotations

import asyncio
import secrets
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .core import (
    ComponentInstance,
    Diagnostic,
    Sketch,
    Terminal,
    Wire,
    extract_nets,
    validate_sketch,
)
from .devices import property_value, registry_lookup
from .errors import SimError, UnknownSessionError, UnknownTerminalError
from .pipeline import simulate
from .sketchio import (
    parse_location,
    sketch_from_json,
    sketch_to_json,
)

DEBOUNCE_SECONDS = 0.03


@dataclass(frozen=True)
class SessionState:
    session_id: str
    revision: int
    sketch: Sketch


@dataclass
class ApplyOutcome:
    ok: bool
    state: SessionState
    op_name: str
    errors: list = field(default_factory=list)
    mutated: bool = False
    highlight: dict | None = None


def _bad_op(subject: str, message: str) -> Diagnostic:
    return Diagnostic("BAD_OP", subject, message)


def _clone_component(c: ComponentInstance, properties=None, placements=None):
    return ComponentInstance(
        c.id, c.kind,
        dict(c.properties) if properties is None else properties,
        dict(c.placements) if placements is None else placements)


class SessionManager:
    """Synchronous session registry; all op logic lives here so it can be
    exercised without an event loop."""

    def __init__(self):
        self._states: dict[str, SessionState] = {}

    def __len__(self):
        return len(self._states)

    def create(self, sketch: Sketch | None = None) -> SessionState:
        sid = secrets.token_hex(8)
        state = SessionState(sid, 0, sketch if sketch is not None
                             else Sketch(name="untitled"))
        self._states[sid] = state
        return state

    def get(self, session_id: str) -> SessionState:
        try:
            return self._states[session_id]
        except KeyError:
            raise UnknownSessionError(f"no session {session_id!r}")

    def apply(self, session_id: str, op: dict) -> ApplyOutcome:
        state = self.get(session_id)
        name = op.get("op")
        if name == "highlight":
            return self._highlight(state, op)
        handler = _OPS.get(name)
        if handler is None:
            return ApplyOutcome(False, state, str(name), errors=[
                _bad_op(str(name), f"unknown op {name!r}")])
        errors: list[Diagnostic] = []
        new_sketch = handler(state.sketch, op, errors)
        if errors or new_sketch is None:
            return ApplyOutcome(False, state, name, errors=errors)
        diags = validate_sketch(new_sketch)
        if diags:
            return ApplyOutcome(False, state, name, errors=diags)
        new_state = SessionState(state.session_id, state.revision + 1,
                                 new_sketch)
        self._states[session_id] = new_state
        return ApplyOutcome(True, new_state, name, mutated=True)

    def _highlight(self, state: SessionState, op: dict) -> ApplyOutcome:
        comp = op.get("component")
        pin = op.get("pin")
        if not isinstance(comp, str) or not isinstance(pin, str):
            return ApplyOutcome(False, state, "highlight", errors=[
                _bad_op("highlight", "component and pin are required")])
        netmap = extract_nets(state.sketch)
        try:
            net = netmap.net_of(Terminal(comp, pin))
        except UnknownTerminalError:
            return ApplyOutcome(False, state, "highlight", errors=[
                Diagnostic("DANGLING_REF", f"{comp}.{pin}", "unknown terminal")])
        return ApplyOutcome(True, state, "highlight", highlight={
            "net": net.net_id,
            "ground": net.is_ground,
            "terminals": sorted(f"{t.component_id}.{t.pin_name}"
                                for t in net.terminals),
        })


# ---- op transforms: (sketch, op, errors) -> new sketch or None -------------

def _find_component(sketch, op, errors):
    comp_id = op.get("component")
    if not isinstance(comp_id, str):
        errors.append(_bad_op(op.get("op", "?"), "component id is required"))
        return None
    for c in sketch.components:
        if c.id == comp_id:
            return c
    errors.append(_bad_op(comp_id, f"no component {comp_id!r}"))
    return None


def _swap_component(sketch, replacement):
    comps = [replacement if c.id == replacement.id else c
             for c in sketch.components]
    return Sketch(sketch.name, list(sketch.breadboards), comps,
                  list(sketch.wires))


def _op_load(sketch, op, errors):
    raw = op.get("sketch")
    new_sketch, diags = sketch_from_json(raw)
    if diags:
        errors.extend(diags)
        return None
    return new_sketch


def _op_set_property(sketch, op, errors):
    comp = _find_component(sketch, op, errors)
    name = op.get("name")
    if comp is None:
        return None
    if not isinstance(name, str) or "value" not in op:
        errors.append(_bad_op(comp.id, "set_property needs name and value"))
        return None
    props = dict(comp.properties)
    props[name] = op["value"]
    return _swap_component(sketch, _clone_component(comp, properties=props))


def _op_toggle_switch(sketch, op, errors):
    comp = _find_component(sketch, op, errors)
    if comp is None:
        return None
    if comp.kind == "switch_spst":
        name, flip = "state", {"open": "closed", "closed": "open"}
    elif comp.kind == "switch_spdt":
        name, flip = "selected", {"a": "b", "b": "a"}
    else:
        errors.append(_bad_op(comp.id, f"{comp.id!r} is not a switch"))
        return None
    props = dict(comp.properties)
    props[name] = flip[str(property_value(comp, name))]
    return _swap_component(sketch, _clone_component(comp, properties=props))


def _op_set_pot(sketch, op, errors):
    comp = _find_component(sketch, op, errors)
    if comp is None:
        return None
    position = op.get("position")
    if not isinstance(position, (int, float)) or isinstance(position, bool):
        errors.append(_bad_op(comp.id, "set_pot needs a numeric position"))
        return None
    props = dict(comp.properties)
    props["position"] = float(position)
    return _swap_component(sketch, _clone_component(comp, properties=props))


def _op_set_meter_mode(sketch, op, errors):
    comp = _find_component(sketch, op, errors)
    if comp is None:
        return None
    mode = op.get("mode")
    if not isinstance(mode, str):
        errors.append(_bad_op(comp.id, "set_meter_mode needs a mode"))
        return None
    props = dict(comp.properties)
    props["mode"] = mode
    return _swap_component(sketch, _clone_component(comp, properties=props))


def _op_move_probe(sketch, op, errors):
    comp = _find_component(sketch, op, errors)
    pin = op.get("pin")
    if comp is None:
        return None
    if not isinstance(pin, str):
        errors.append(_bad_op(comp.id, "move_probe needs a pin name"))
        return None
    places = dict(comp.placements)
    target = op.get("to")
    if target is None:
        places.pop(pin, None)
    else:
        loc, diags = parse_location(target, sketch.breadboards, "to")
        if diags:
            errors.extend(diags)
            return None
        places[pin] = loc
    return _swap_component(sketch, _clone_component(comp, placements=places))


def _op_add_wire(sketch, op, errors):
    wire_id = op.get("id")
    if not isinstance(wire_id, str) or not wire_id:
        errors.append(_bad_op("add_wire", "wire id is required"))
        return None
    a, diags_a = parse_location(op.get("a"), sketch.breadboards, "a")
    b, diags_b = parse_location(op.get("b"), sketch.breadboards, "b")
    errors.extend(diags_a)
    errors.extend(diags_b)
    if a is None or b is None:
        return None
    return Sketch(sketch.name, list(sketch.breadboards),
                  list(sketch.components), list(sketch.wires) + [Wire(wire_id, a, b)])


def _op_remove_wire(sketch, op, errors):
    wire_id = op.get("id")
    kept = [w for w in sketch.wires if w.id != wire_id]
    if len(kept) == len(sketch.wires):
        errors.append(_bad_op(str(wire_id), f"no wire {wire_id!r}"))
        return None
    return Sketch(sketch.name, list(sketch.breadboards),
                  list(sketch.components), kept)


_OPS = {
    "load": _op_load,
    "set_property": _op_set_property,
    "toggle_switch": _op_toggle_switch,
    "set_pot": _op_set_pot,
    "set_meter_mode": _op_set_meter_mode,
    "move_probe": _op_move_probe,
    "add_wire": _op_add_wire,
    "remove_wire": _op_remove_wire,
}


# ---- frames -----------------------------------------------------------------

def results_frame(state: SessionState) -> dict:
    """Solve the session's sketch and shape the broadcast payload."""
    frame = {
        "type": "results",
        "revision": state.revision,
        "name": state.sketch.name,
        "converged": False,
        "readings": [],
        "smoke": [],
        "excluded": sorted(c.id for c in state.sketch.components
                           if not registry_lookup(c.kind).simulatable),
    }
    try:
        result = simulate(state.sketch, validate=False)
    except SimError as exc:
        frame["failure"] = {"code": exc.code, "message": str(exc)}
        return frame
    frame["converged"] = result.converged
    frame["readings"] = [r.as_json() for r in result.readings]
    frame["smoke"] = [e.as_json() for e in result.smoke_events]
    if result.solution is not None:
        frame["strategy"] = result.solution.strategy
        frame["iterations"] = result.solution.iterations
        frame["nets"] = {str(net.net_id): result.solution.node_voltages[net.net_id]
                         for net in result.netmap.nets}
    if result.failure is not None:
        frame["failure"] = result.failure
    return frame


@dataclass
class _LiveSession:
    sockets: set = field(default_factory=set)
    dirty: asyncio.Event = field(default_factory=asyncio.Event)
    worker: asyncio.Task | None = None
    last_sent: int = -1


def create_app(static_dir: str | None = None) -> FastAPI:
    manager = SessionManager()
    live: dict[str, _LiveSession] = {}

    @asynccontextmanager
    async def lifespan(app):
        yield
        for entry in live.values():
            if entry.worker is not None:
                entry.worker.cancel()

    app = FastAPI(title="circsim lab service", lifespan=lifespan)
    app.state.manager = manager

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(manager)}

    @app.post("/sessions")
    def create_session(payload: dict | None = Body(default=None)):
        sketch = None
        if payload and "sketch" in payload:
            sketch, diags = sketch_from_json(payload["sketch"])
            if not diags:
                diags = validate_sketch(sketch)
            if diags:
                raise HTTPException(
                    status_code=422,
                    detail=[d.as_json() for d in diags])
        elif payload and "name" in payload:
            sketch = Sketch(name=str(payload["name"]))
        state = manager.create(sketch)
        return {"session_id": state.session_id, "revision": state.revision}

    @app.get("/sessions/{session_id}/sketch")
    def get_sketch(session_id: str):
        try:
            state = manager.get(session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404,
                                detail={"code": exc.code, "message": str(exc)})
        return {"session_id": session_id, "revision": state.revision,
                "sketch": sketch_to_json(state.sketch)}

    async def _broadcast_worker(session_id: str, entry: _LiveSession):
        while True:
            await entry.dirty.wait()
            entry.dirty.clear()
            await asyncio.sleep(DEBOUNCE_SECONDS)
            try:
                state = manager.get(session_id)
            except UnknownSessionError:
                return
            frame = await asyncio.to_thread(results_frame, state)
            # a newer revision committed while solving: recompute instead
            if manager.get(session_id).revision > state.revision:
                entry.dirty.set()
                continue
            if state.revision < entry.last_sent:
                continue
            entry.last_sent = state.revision
            for sock in list(entry.sockets):
                try:
                    await sock.send_json(frame)
                except Exception:
                    entry.sockets.discard(sock)

    async def _handle_op(ws: WebSocket, session_id: str,
                         entry: _LiveSession, op):
        state = manager.get(session_id)
        if not isinstance(op, dict) or "op" not in op:
            await ws.send_json({
                "type": "rejected", "revision": state.revision, "op": None,
                "errors": [_bad_op("op", "message must carry an op field").as_json()],
            })
            return
        outcome = manager.apply(session_id, op)
        if not outcome.ok:
            await ws.send_json({
                "type": "rejected",
                "revision": outcome.state.revision,
                "op": outcome.op_name,
                "errors": [d.as_json() for d in outcome.errors],
            })
        elif outcome.highlight is not None:
            await ws.send_json({
                "type": "highlight",
                "revision": outcome.state.revision,
                **outcome.highlight,
            })
        else:
            entry.dirty.set()

    @app.websocket("/sessions/{session_id}/ws")
    async def session_ws(ws: WebSocket, session_id: str):
        try:
            manager.get(session_id)
        except UnknownSessionError:
            await ws.close(code=4404)
            return
        await ws.accept()
        entry = live.setdefault(session_id, _LiveSession())
        entry.sockets.add(ws)
        if entry.worker is None or entry.worker.done():
            entry.worker = asyncio.create_task(
                _broadcast_worker(session_id, entry))
        entry.dirty.set()
        try:
            while True:
                op = await ws.receive_json()
                await _handle_op(ws, session_id, entry, op)
        except WebSocketDisconnect:
            pass
        finally:
            entry.sockets.discard(ws)
            if not entry.sockets and entry.worker is not None:
                entry.worker.cancel()
                entry.worker = None

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="static")
    return app
