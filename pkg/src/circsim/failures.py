"""Post-solve operating-limit checks.

Every check compares a converged operating quantity against the
component's effective limit (per-instance overrides included) with a
strict inequality, so sitting exactly at the limit is still healthy.
One component can emit several events, e.g. a polarized capacitor driven
far backwards violates both its reverse and absolute voltage ratings.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Sketch
from .devices import limits_for

SHORT_CIRCUIT = "SHORT_CIRCUIT"
MAX_CURRENT = "MAX_CURRENT"
MAX_POWER = "MAX_POWER"
REVERSE_VOLTAGE = "REVERSE_VOLTAGE"
MAX_VOLTAGE = "MAX_VOLTAGE"


@dataclass(frozen=True)
class SmokeEvent:
    component_id: str
    kind: str
    measured: float
    limit: float
    pin: str | None = None

    def as_json(self) -> dict:
        out = {"component": self.component_id, "kind": self.kind,
               "measured": self.measured, "limit": self.limit}
        if self.pin is not None:
            out["pin"] = self.pin
        return out

    def text_line(self) -> str:
        line = (f"SMOKE {self.component_id} {self.kind} "
                f"measured={self.measured:.6g} limit={self.limit:.6g}")
        if self.pin is not None:
            line += f" pin={self.pin}"
        return line


def _check_source(comp, lim, state, out):
    i = state.current
    if lim.max_current is not None and abs(i) > lim.max_current:
        out.append(SmokeEvent(comp.id, SHORT_CIRCUIT, i, lim.max_current))


def _check_resistor(comp, lim, state, out):
    if lim.max_power is not None and state.power > lim.max_power:
        out.append(SmokeEvent(comp.id, MAX_POWER, state.power, lim.max_power))


def _check_potentiometer(comp, lim, state, out):
    # the two track halves dissipate independently
    for pin in ("a", "b"):
        p = state.extra[f"power_{pin}"]
        if lim.max_power is not None and p > lim.max_power:
            out.append(SmokeEvent(comp.id, MAX_POWER, p, lim.max_power, pin=pin))


def _check_series_current(comp, lim, state, out):
    i = state.current
    if lim.max_current is not None and abs(i) > lim.max_current:
        out.append(SmokeEvent(comp.id, MAX_CURRENT, i, lim.max_current))


def _check_voltage(comp, lim, state, out, volts=None):
    v = state.voltage if volts is None else volts
    if lim.max_voltage is not None and abs(v) > lim.max_voltage:
        out.append(SmokeEvent(comp.id, MAX_VOLTAGE, v, lim.max_voltage))
    if lim.polarized and v < -lim.max_reverse_voltage:
        out.append(SmokeEvent(comp.id, REVERSE_VOLTAGE, v,
                              -lim.max_reverse_voltage))


def _check_output_pin(comp, lim, state, out):
    i = state.pin_currents["OUT"]
    if lim.max_current is not None and abs(i) > lim.max_current:
        out.append(SmokeEvent(comp.id, MAX_CURRENT, i, lim.max_current,
                              pin="OUT"))


def _check_ir_sensor(comp, lim, state, out):
    _check_voltage(comp, lim, state, out)
    _check_output_pin(comp, lim, state, out)


_CHECKERS = {
    "battery": _check_source,
    "dc_supply": _check_source,
    "resistor": _check_resistor,
    "potentiometer": _check_potentiometer,
    "diode": _check_series_current,
    "led": _check_series_current,
    "inductor": _check_series_current,
    "ceramic_capacitor": _check_voltage,
    "electrolytic_capacitor": _check_voltage,
    "tantalum_capacitor": _check_voltage,
    "dc_motor": _check_voltage,
    "nand_gate": _check_output_pin,
    "ir_sensor": _check_ir_sensor,
}


def check_failures(sketch: Sketch, solution) -> list[SmokeEvent]:
    """All limit violations at the solved operating point.

    Sorted by (component id, event kind) so output is deterministic; the
    potentiometer's two halves additionally order by pin.
    """
    events: list[SmokeEvent] = []
    for comp in sorted(sketch.components, key=lambda c: c.id):
        checker = _CHECKERS.get(comp.kind)
        if checker is None:
            continue
        state = solution.element_states.get(comp.id)
        if state is None or state.excluded:
            continue
        checker(comp, limits_for(comp), state, events)
    events.sort(key=lambda e: (e.component_id, e.kind, e.pin or ""))
    return events
