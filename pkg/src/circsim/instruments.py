"""Multimeter behavior: jack discipline, burden models, display strings.

The meter is a real circuit participant, not an oracle probe. Voltmeters
load the circuit with their input resistance, ammeters insert a 0 V
source branch and report its current, and the ohmmeter drives a test
current and reports V/I, which in a powered circuit can legitimately come
out negative.

Jack discipline mirrors a bench meter: voltage and resistance modes use
COM and V-ohm, current modes use COM and A. Anything else wired reads ERR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .core import NetMap, Terminal
from .devices import (
    OMEGA,
    PIN_AMP,
    PIN_COM,
    PIN_VOHM,
    CompiledDevice,
    Conductance,
    CurrentSource,
    ElementState,
    VoltageSourceBranch,
    property_value,
)

OHM_OVERLOAD = 40e6        # ohms; beyond this the meter shows OL
DISPLAY_FLOOR = 1e-6       # below one micro-unit the display shows zero

STATUS_OK = "OK"
STATUS_OL = "OL"
STATUS_ERR = "ERR"
STATUS_UNSUPPORTED = "UNSUPPORTED"

_MODE_UNITS = {"V_DC": "V", "V_AC": "V", "A_DC": "A", "A_AC": "A", "OHM": OMEGA}
_MODE_JACKS = {
    "V_DC": frozenset((PIN_COM, PIN_VOHM)),
    "V_AC": frozenset((PIN_COM, PIN_VOHM)),
    "OHM": frozenset((PIN_COM, PIN_VOHM)),
    "A_DC": frozenset((PIN_COM, PIN_AMP)),
    "A_AC": frozenset((PIN_COM, PIN_AMP)),
}
# prefix exponents are powers of ten, largest first
_PREFIXES = ((6, "M"), (3, "k"), (0, ""), (-3, "m"), (-6, "µ"))


@dataclass(frozen=True)
class MultimeterConfig:
    component_id: str
    mode: str
    input_resistance: float
    test_current: float

    def jack(self, name: str) -> Terminal:
        return Terminal(self.component_id, name)


@dataclass(frozen=True)
class Reading:
    meter_id: str
    status: str
    value: float | None
    display: str

    def as_json(self) -> dict:
        out = {"meter": self.meter_id, "status": self.status,
               "display": self.display}
        if self.status == STATUS_OK:
            out["value"] = self.value
        return out


def meter_config(instance) -> MultimeterConfig:
    return MultimeterConfig(
        component_id=instance.id,
        mode=str(property_value(instance, "mode")),
        input_resistance=float(property_value(instance, "input_resistance")),
        test_current=float(property_value(instance, "test_current")),
    )


def validate_probes(cfg: MultimeterConfig, netmap: NetMap) -> bool:
    """True iff every wired jack is legal for the mode.

    A jack is wired when its terminal shares a net with anything else.
    Unwired jacks never invalidate, so an idle meter on the bench is fine.
    """
    wired = {name for name in (PIN_COM, PIN_VOHM, PIN_AMP)
             if not netmap.is_singleton(cfg.jack(name))}
    return wired <= _MODE_JACKS[cfg.mode]


def internal_model(cfg: MultimeterConfig, netmap: NetMap) -> list:
    """Stamps the meter contributes; caller must have validated probes."""
    if cfg.mode in ("V_AC", "A_AC"):
        return []
    com = netmap.net_id_of(cfg.jack(PIN_COM))
    if cfg.mode == "V_DC":
        vohm = netmap.net_id_of(cfg.jack(PIN_VOHM))
        return [Conductance(vohm, com, 1.0 / cfg.input_resistance)]
    if cfg.mode == "A_DC":
        amp = netmap.net_id_of(cfg.jack(PIN_AMP))
        return [VoltageSourceBranch(amp, com, 0.0, cfg.component_id)]
    vohm = netmap.net_id_of(cfg.jack(PIN_VOHM))
    return [CurrentSource(com, vohm, cfg.test_current)]


def compile_meter(instance, netmap: NetMap) -> CompiledDevice:
    """Meter as a compiled device; invalid probes contribute nothing."""
    cfg = meter_config(instance)
    ok = validate_probes(cfg, netmap)
    stamps = internal_model(cfg, netmap) if ok else []
    ncom = netmap.net_id_of(cfg.jack(PIN_COM))
    nvohm = netmap.net_id_of(cfg.jack(PIN_VOHM))

    def state(acc):
        pins = {PIN_COM: 0.0, PIN_VOHM: 0.0, PIN_AMP: 0.0}
        if ok and cfg.mode == "V_DC":
            i = (acc.voltage(nvohm) - acc.voltage(ncom)) / cfg.input_resistance
            pins[PIN_VOHM], pins[PIN_COM] = i, -i
        elif ok and cfg.mode == "A_DC":
            i = acc.branch_current(cfg.component_id)
            pins[PIN_AMP], pins[PIN_COM] = i, -i
        elif ok and cfg.mode == "OHM":
            pins[PIN_VOHM], pins[PIN_COM] = -cfg.test_current, cfg.test_current
        namp = netmap.net_id_of(cfg.jack(PIN_AMP))
        power = (acc.voltage(ncom) * pins[PIN_COM]
                 + acc.voltage(nvohm) * pins[PIN_VOHM]
                 + acc.voltage(namp) * pins[PIN_AMP])
        return ElementState(kind="multimeter", power=power, pin_currents=pins,
                            extra={"probes_ok": 1.0 if ok else 0.0})

    return CompiledDevice(instance.id, stamps, None, state)


def compute_reading(cfg: MultimeterConfig, netmap: NetMap, solution) -> Reading:
    """Turn one meter's view of a solved circuit into a Reading."""
    if not validate_probes(cfg, netmap):
        return Reading(cfg.component_id, STATUS_ERR, None, "ERR")
    if cfg.mode in ("V_AC", "A_AC"):
        return Reading(cfg.component_id, STATUS_UNSUPPORTED, None, "---")

    def volts_at(jack_name):
        return solution.node_voltages[netmap.net_id_of(cfg.jack(jack_name))]

    if cfg.mode == "V_DC":
        value = volts_at(PIN_VOHM) - volts_at(PIN_COM)
        return Reading(cfg.component_id, STATUS_OK, value,
                       format_display(STATUS_OK, value, cfg.mode))
    if cfg.mode == "A_DC":
        value = solution.branch_currents[cfg.component_id]
        return Reading(cfg.component_id, STATUS_OK, value,
                       format_display(STATUS_OK, value, cfg.mode))
    # OHM: open leads or out-of-range resistance both show OL
    if netmap.is_singleton(cfg.jack(PIN_VOHM)) or netmap.is_singleton(cfg.jack(PIN_COM)):
        return Reading(cfg.component_id, STATUS_OL, None, "OL")
    value = (volts_at(PIN_VOHM) - volts_at(PIN_COM)) / cfg.test_current
    if value > OHM_OVERLOAD:
        return Reading(cfg.component_id, STATUS_OL, None, "OL")
    return Reading(cfg.component_id, STATUS_OK, value,
                   format_display(STATUS_OK, value, cfg.mode))


def _sig4(mag: float) -> Decimal:
    """Round a positive magnitude to 4 significant digits, half away from zero."""
    exp = math.floor(math.log10(mag))
    quant = Decimal(1).scaleb(exp - 3)
    return Decimal(repr(mag)).quantize(quant, rounding=ROUND_HALF_UP)


def format_display(status: str, value: float | None, mode: str) -> str:
    """Render a reading the way the meter's LCD would.

    OK values show 4 significant digits with an SI prefix between micro
    and mega; magnitudes under one micro-unit are below the instrument's
    resolution and display as zero. Rounding is half away from zero.
    """
    if status != STATUS_OK:
        return {STATUS_OL: "OL", STATUS_ERR: "ERR",
                STATUS_UNSUPPORTED: "---"}[status]
    unit = _MODE_UNITS[mode]
    mag = abs(value)
    if mag < DISPLAY_FLOOR:
        return "0.000" + unit
    sign = "-" if value < 0 else ""
    d = _sig4(mag)
    for exp, prefix in _PREFIXES:
        if d >= Decimal(1).scaleb(exp):
            break
    mant = d.scaleb(-exp)
    if mant < 10:
        decimals = 3
    elif mant < 100:
        decimals = 2
    elif mant < 1000:
        decimals = 1
    else:
        decimals = 0  # magnitude beyond the mega prefix stays unscaled
    return f"{sign}{mant:.{decimals}f}{prefix}{unit}"
