"""Device catalogue: descriptors, DC models, and MNA stamp builders.

Each supported kind declares a descriptor (pins, properties with defaults
and ranges, operating limits) plus a compile function that turns one
placed instance into linear stamps, an optional nonlinear element, and a
state extractor used for failure checks and bookkeeping.

Sign conventions used throughout:
  - pin currents are measured INTO the device;
  - a Companion's jacobian entry (row, col, J) is d(I into device at the
    row net)/d(V at the col net); its rhs entry is sum(J * v_lin) - I(v_lin)
    so the assembler can add both straight into the system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .core import NetMap, ComponentInstance
from .errors import NotSimulatableError

VT = 0.02585             # junction thermal voltage, volts
SWITCH_ON_RES = 1e-3     # closed contact resistance, ohms
EXP_CLAMP = 200.0        # exponent cap; extended linearly beyond to keep dI/dV consistent

OMEGA = "Ω"
PIN_COM = "COM"
PIN_VOHM = "V" + OMEGA
PIN_AMP = "A"
METER_MODES = ("V_DC", "V_AC", "A_DC", "A_AC", "OHM")


# --------------------------------------------------------------------------
# stamp primitives

@dataclass(frozen=True)
class Conductance:
    net_a: int
    net_b: int
    siemens: float


@dataclass(frozen=True)
class VoltageSourceBranch:
    """Ideal source with its own current unknown; V(plus) - V(minus) = volts."""

    net_plus: int
    net_minus: int
    volts: float
    branch_id: str


@dataclass(frozen=True)
class CurrentSource:
    """Pushes ``amperes`` from net_from through the element into net_to."""

    net_from: int
    net_to: int
    amperes: float


LinearStamp = Conductance | VoltageSourceBranch | CurrentSource


@dataclass
class Companion:
    """Linearization of one nonlinear element at its evaluation point.

    ``limited`` is set when a step limiter overrode the requested
    junction voltage; the Newton loop must not declare convergence while
    any element is still being limited, because node voltages and
    companion currents can both sit still during the limiting walk.
    """

    jac: list
    rhs: list
    conv_currents: tuple
    limited: bool = False


@dataclass
class ElementState:
    """Operating data for one component at a converged solution."""

    kind: str
    excluded: bool = False
    voltage: float | None = None
    current: float | None = None
    power: float | None = None
    pin_currents: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


@dataclass
class CompiledDevice:
    component_id: str
    linear: list
    element: "NonlinearElement | None"
    state_fn: "callable"


class NodeAllocator:
    """Hands out internal node ids above the NetMap's numbering."""

    def __init__(self, netmap: NetMap):
        self._next = len(netmap.nets) + 1
        self.names: dict[int, tuple] = {}

    def node(self, component_id: str, tag: str) -> int:
        nid = self._next
        self._next += 1
        self.names[nid] = (component_id, tag)
        return nid


# --------------------------------------------------------------------------
# descriptors

@dataclass(frozen=True)
class PropertySpec:
    name: str
    unit: str
    default: object
    minimum: float | None = None
    maximum: float | None = None
    choices: tuple | None = None


@dataclass(frozen=True)
class LimitSet:
    max_current: float | None = None
    max_power: float | None = None
    max_voltage: float | None = None
    polarized: bool = False
    max_reverse_voltage: float = 0.0


@dataclass(frozen=True)
class DeviceDescriptor:
    kind: str
    pins: tuple
    properties: tuple = ()
    simulatable: bool = True
    limits: LimitSet = LimitSet()


def _p(name, unit, default, minimum=None, maximum=None, choices=None):
    return PropertySpec(name, unit, default, minimum, maximum, choices)


REGISTRY: dict[str, DeviceDescriptor] = {}
_COMPILERS: dict[str, "callable"] = {}
_LIMIT_BUILDERS: dict[str, "callable"] = {}


def _register(descriptor, compiler=None, limit_builder=None):
    REGISTRY[descriptor.kind] = descriptor
    if compiler is not None:
        _COMPILERS[descriptor.kind] = compiler
    if limit_builder is not None:
        _LIMIT_BUILDERS[descriptor.kind] = limit_builder


def registry_lookup(kind: str) -> DeviceDescriptor:
    """Descriptor for a kind; unknown kinds come back non-simulatable."""
    try:
        return REGISTRY[kind]
    except KeyError:
        return DeviceDescriptor(kind=kind, pins=(), simulatable=False)


def descriptor_for(instance: ComponentInstance) -> DeviceDescriptor:
    """Descriptor specialized to one instance.

    Non-simulatable kinds (unknown or registered as unmodeled) have no
    declared pin list, so their pins are copied from the placements.
    """
    d = registry_lookup(instance.kind)
    if not d.simulatable:
        return replace(d, pins=tuple(instance.placements.keys()))
    return d


def property_value(instance: ComponentInstance, name: str):
    """Instance override if present, declared default otherwise."""
    if name in instance.properties:
        return instance.properties[name]
    for spec in registry_lookup(instance.kind).properties:
        if spec.name == name:
            return spec.default
    raise KeyError(f"{instance.kind} has no property {name!r}")


def _num(instance, name) -> float:
    return float(property_value(instance, name))


def limits_for(instance: ComponentInstance) -> LimitSet:
    """Effective operating limits, honoring per-instance overrides."""
    builder = _LIMIT_BUILDERS.get(instance.kind)
    if builder is None:
        return registry_lookup(instance.kind).limits
    return builder(lambda name: _num(instance, name))


# --------------------------------------------------------------------------
# shared nonlinear math

def _safe_exp(x: float):
    """exp(x) with a linear extension above EXP_CLAMP.

    Returns (value, derivative). The extension keeps the reported
    conductance equal to the true slope everywhere, which junction
    limiting otherwise never exercises.
    """
    if x > EXP_CLAMP:
        e = math.exp(EXP_CLAMP)
        return e * (1.0 + (x - EXP_CLAMP)), e
    e = math.exp(x)
    return e, e


def diode_iv(vd: float, isat: float, n: float):
    """Shockley current and small-signal conductance at junction voltage vd."""
    ex, dex = _safe_exp(vd / (n * VT))
    return isat * (ex - 1.0), isat * dex / (n * VT)


def junction_vcrit(isat: float, n: float) -> float:
    return n * VT * math.log(n * VT / (isat * math.sqrt(2.0)))


def pnjlim(vnew: float, vold: float, vt: float, vcrit: float) -> float:
    """Classic junction voltage step limiter.

    Steps past vcrit are pulled back logarithmically toward the previous
    iterate, which tames the exponential during Newton iteration.
    """
    if vnew > vcrit and abs(vnew - vold) > 2.0 * vt:
        if vold > 0.0:
            arg = 1.0 + (vnew - vold) / vt
            vnew = vold + vt * math.log(arg) if arg > 0.0 else vcrit
        else:
            vnew = vt * math.log(vnew / vt)
    return vnew


def _junction_companion(rows, juncs) -> tuple:
    """Build node-space jac/rhs from junction-space partials.

    rows:  [(net, I_at_lin, {junction_index: dI/dv_j}), ...]
    juncs: [(net_plus, net_minus, v_lin), ...]
    """
    jac, rhs = [], []
    for net, i0, partials in rows:
        r = -i0
        for jx, didv in partials.items():
            np_, nm_, vlin = juncs[jx]
            if didv != 0.0:
                jac.append((net, np_, didv))
                jac.append((net, nm_, -didv))
            r += didv * vlin
        rhs.append((net, r))
    return jac, rhs


class NonlinearElement:
    """One Newton-iterated element; subclasses define eval/currents."""

    component_id = ""

    def reset(self):
        """Forget limiting history (called at the start of each attempt)."""

    def eval(self, volts) -> Companion:
        raise NotImplementedError

    def currents(self, volts) -> dict:
        """True pin currents (into device) at the given node voltages."""
        raise NotImplementedError


class DiodeElement(NonlinearElement):
    def __init__(self, component_id, kind, net_a, net_c, isat, n):
        self.component_id = component_id
        self.kind = kind
        self.na, self.nc = net_a, net_c
        self.isat, self.n = isat, n
        self.vcrit = junction_vcrit(isat, n)
        self.v_prev = 0.0

    def reset(self):
        self.v_prev = 0.0

    def eval(self, volts) -> Companion:
        vraw = volts(self.na) - volts(self.nc)
        vd = pnjlim(vraw, self.v_prev, self.n * VT, self.vcrit)
        self.v_prev = vd
        i, g = diode_iv(vd, self.isat, self.n)
        jac, rhs = _junction_companion(
            rows=[(self.na, i, {0: g}), (self.nc, -i, {0: -g})],
            juncs=[(self.na, self.nc, vd)],
        )
        return Companion(jac, rhs, (i,), limited=vd != vraw)

    def currents(self, volts) -> dict:
        i, _ = diode_iv(volts(self.na) - volts(self.nc), self.isat, self.n)
        return {"anode": i, "cathode": -i}


class BjtElement(NonlinearElement):
    """Ebers-Moll NPN in transport form, full 2x2 junction jacobian."""

    def __init__(self, component_id, nb, nc, ne, isat, bf, br):
        self.component_id = component_id
        self.nb, self.nc, self.ne = nb, nc, ne
        self.isat, self.bf, self.br = isat, bf, br
        self.vcrit = junction_vcrit(isat, 1.0)
        self.vbe_prev = 0.0
        self.vbc_prev = 0.0

    def reset(self):
        self.vbe_prev = 0.0
        self.vbc_prev = 0.0

    def _terms(self, vbe, vbc):
        ebe, debe = _safe_exp(vbe / VT)
        ebc, debc = _safe_exp(vbc / VT)
        ict = self.isat * (ebe - ebc)
        ibe = self.isat / self.bf * (ebe - 1.0)
        ibc = self.isat / self.br * (ebc - 1.0)
        gtf = self.isat * debe / VT
        gtr = self.isat * debc / VT
        gbe = self.isat / self.bf * debe / VT
        gbc = self.isat / self.br * debc / VT
        return ict, ibe, ibc, gtf, gtr, gbe, gbc

    def eval(self, volts) -> Companion:
        vbe_raw = volts(self.nb) - volts(self.ne)
        vbc_raw = volts(self.nb) - volts(self.nc)
        vbe = pnjlim(vbe_raw, self.vbe_prev, VT, self.vcrit)
        vbc = pnjlim(vbc_raw, self.vbc_prev, VT, self.vcrit)
        limited = vbe != vbe_raw or vbc != vbc_raw
        self.vbe_prev, self.vbc_prev = vbe, vbc
        ict, ibe, ibc, gtf, gtr, gbe, gbc = self._terms(vbe, vbc)
        ic = ict - ibc
        ib = ibe + ibc
        ie = -ict - ibe
        jac, rhs = _junction_companion(
            rows=[
                (self.nc, ic, {0: gtf, 1: -gtr - gbc}),
                (self.nb, ib, {0: gbe, 1: gbc}),
                (self.ne, ie, {0: -gtf - gbe, 1: gtr}),
            ],
            juncs=[(self.nb, self.ne, vbe), (self.nb, self.nc, vbc)],
        )
        return Companion(jac, rhs, (ic, ib), limited=limited)

    def currents(self, volts) -> dict:
        vbe = volts(self.nb) - volts(self.ne)
        vbc = volts(self.nb) - volts(self.nc)
        ict, ibe, ibc, *_ = self._terms(vbe, vbc)
        return {
            "collector": ict - ibc,
            "base": ibe + ibc,
            "emitter": -ict - ibe,
        }


def _mos_id(vgs: float, vds: float, vth: float, kp: float):
    """Level-1 drain current and (gm, gds) for vds >= 0, lambda = 0.

    Saturation current is kp/2 * (vgs - vth)^2.
    """
    vov = vgs - vth
    if vov <= 0.0:
        return 0.0, 0.0, 0.0
    if vds < vov:
        return kp * (vov * vds - 0.5 * vds * vds), kp * vds, kp * (vov - vds)
    return 0.5 * kp * vov * vov, kp * vov, 0.0


class NmosElement(NonlinearElement):
    def __init__(self, component_id, ng, nd, ns, vth, kp):
        self.component_id = component_id
        self.ng, self.nd, self.ns = ng, nd, ns
        self.vth, self.kp = vth, kp

    def _operating(self, volts):
        vg, vd, vs = volts(self.ng), volts(self.nd), volts(self.ns)
        if vd >= vs:
            return self.nd, self.ns, vg - vs, vd - vs, False
        return self.ns, self.nd, vg - vd, vs - vd, True

    def eval(self, volts) -> Companion:
        nd_e, ns_e, vgs, vds, reverse = self._operating(volts)
        id_, gm, gds = _mos_id(vgs, vds, self.vth, self.kp)
        jac, rhs = _junction_companion(
            rows=[
                (nd_e, id_, {0: gm, 1: gds}),
                (ns_e, -id_, {0: -gm, 1: -gds}),
            ],
            juncs=[(self.ng, ns_e, vgs), (nd_e, ns_e, vds)],
        )
        return Companion(jac, rhs, (-id_ if reverse else id_,))

    def currents(self, volts) -> dict:
        nd_e, ns_e, vgs, vds, reverse = self._operating(volts)
        id_, _, _ = _mos_id(vgs, vds, self.vth, self.kp)
        drain_in = -id_ if reverse else id_
        return {"gate": 0.0, "drain": drain_in, "source": -drain_in}


def _sigmoid(u: float) -> float:
    """1 / (1 + exp(u)), stable for large |u|."""
    if u >= 0.0:
        e = math.exp(-min(u, EXP_CLAMP))
        return e / (1.0 + e)
    e = math.exp(max(u, -EXP_CLAMP))
    return 1.0 / (1.0 + e)


class NandElement(NonlinearElement):
    """Behavioral NAND output stage: logistic source behind R_out.

    Open-circuit output sits at D / (1 + exp(k (min(VA,VB)-span midpoint)))
    above VSS with k = 20/D, D being the VDD-VSS span. Input loading is
    stamped separately as linear resistors.
    """

    def __init__(self, component_id, nvdd, nvss, na, nb, nout, rout):
        self.component_id = component_id
        self.nvdd, self.nvss = nvdd, nvss
        self.na, self.nb, self.nout = na, nb, nout
        self.g = 1.0 / rout

    def open_circuit(self, vdd, vss, va, vb):
        """Output value above VSS plus its partials (df/dm, df/dD)."""
        span = vdd - vss
        if span < 1e-6:
            return 0.0, 0.0, 0.0
        m = min(va, vb) - vss
        s = _sigmoid(20.0 * m / span - 10.0)
        f = span * s
        sw = s * (1.0 - s)
        dfdm = -20.0 * sw
        dfdd = s + (20.0 * m / span) * sw
        return f, dfdm, dfdd

    def _i_out(self, volts):
        vdd, vss = volts(self.nvdd), volts(self.nvss)
        va, vb = volts(self.na), volts(self.nb)
        vout = volts(self.nout)
        f, dfdm, dfdd = self.open_circuit(vdd, vss, va, vb)
        i = (vout - vss - f) * self.g
        sel = self.na if va <= vb else self.nb
        return i, f, dfdm, dfdd, sel, vss

    def eval(self, volts) -> Companion:
        i, f, dfdm, dfdd, sel, _vss = self._i_out(volts)
        g = self.g
        # partials of current-into-OUT; m depends on (sel, VSS), D on (VDD, VSS)
        partials = {self.nout: g}
        partials[sel] = partials.get(sel, 0.0) - dfdm * g
        partials[self.nvdd] = partials.get(self.nvdd, 0.0) - dfdd * g
        dvss = (-1.0 + dfdm + dfdd) * g
        partials[self.nvss] = partials.get(self.nvss, 0.0) + dvss
        jac, rhs = [], []
        for net, sign, i0 in ((self.nout, 1.0, i), (self.nvss, -1.0, -i)):
            r = -i0
            for col, didv in partials.items():
                jac.append((net, col, sign * didv))
                r += sign * didv * volts(col)
            rhs.append((net, r))
        return Companion(jac, rhs, (i,))

    def currents(self, volts) -> dict:
        i, *_ = self._i_out(volts)
        return {"OUT": i, "VSS": -i}


# --------------------------------------------------------------------------
# compile functions (kind -> stamps + state extractor)

def _two_pin_resistance(comp, netmap, pins, ohms):
    n1 = netmap.net_id_of(comp.terminal(pins[0]))
    n2 = netmap.net_id_of(comp.terminal(pins[1]))
    g = 1.0 / ohms

    def state(acc):
        v = acc.voltage(n1) - acc.voltage(n2)
        i = g * v
        return ElementState(kind=comp.kind, voltage=v, current=i, power=v * i,
                            pin_currents={pins[0]: i, pins[1]: -i})

    return [Conductance(n1, n2, g)], state


def _compile_resistor(comp, netmap, alloc):
    stamps, state = _two_pin_resistance(comp, netmap, ("1", "2"),
                                        _num(comp, "resistance"))
    return CompiledDevice(comp.id, stamps, None, state)


def _compile_dc_motor(comp, netmap, alloc):
    stamps, state = _two_pin_resistance(comp, netmap, ("1", "2"),
                                        _num(comp, "winding_resistance"))
    return CompiledDevice(comp.id, stamps, None, state)


def potentiometer_split(comp) -> tuple:
    """Track-half resistances (ra, rb) for the instance's wiper position.

    Both halves are clamped to >= max_resistance/1000 while keeping
    ra + rb == max_resistance exact.
    """
    rmax = _num(comp, "max_resistance")
    frac = min(max(_num(comp, "position"), 1e-3), 1.0 - 1e-3)
    ra = frac * rmax
    return ra, rmax - ra


def _compile_potentiometer(comp, netmap, alloc):
    n1 = netmap.net_id_of(comp.terminal("1"))
    nw = netmap.net_id_of(comp.terminal("wiper"))
    n2 = netmap.net_id_of(comp.terminal("2"))
    ra, rb = potentiometer_split(comp)
    ga, gb = 1.0 / ra, 1.0 / rb
    stamps = [Conductance(n1, nw, ga), Conductance(nw, n2, gb)]

    def state(acc):
        va = acc.voltage(n1) - acc.voltage(nw)
        vb = acc.voltage(nw) - acc.voltage(n2)
        ia, ib = ga * va, gb * vb
        return ElementState(
            kind=comp.kind, voltage=va + vb, current=None,
            power=va * ia + vb * ib,
            pin_currents={"1": ia, "wiper": ib - ia, "2": -ib},
            extra={"resistance_a": ra, "resistance_b": rb,
                   "power_a": va * ia, "power_b": vb * ib},
        )

    return CompiledDevice(comp.id, stamps, None, state)


def _compile_source(comp, netmap, alloc):
    npl = netmap.net_id_of(comp.terminal("+"))
    nmi = netmap.net_id_of(comp.terminal("-"))
    volts = _num(comp, "voltage")
    rint = _num(comp, "internal_resistance")
    if rint > 0.0:
        nint = alloc.node(comp.id, "int")
        stamps = [VoltageSourceBranch(nint, nmi, volts, comp.id),
                  Conductance(npl, nint, 1.0 / rint)]
    else:
        nint = None
        stamps = [VoltageSourceBranch(npl, nmi, volts, comp.id)]

    def state(acc):
        i_branch = acc.branch_current(comp.id)
        if nint is None:
            iin_plus = i_branch
        else:
            iin_plus = (acc.voltage(npl) - acc.voltage(nint)) / rint
        iin_minus = -i_branch
        vterm = acc.voltage(npl) - acc.voltage(nmi)
        return ElementState(
            kind=comp.kind, voltage=vterm, current=-i_branch,
            power=acc.voltage(npl) * iin_plus + acc.voltage(nmi) * iin_minus,
            pin_currents={"+": iin_plus, "-": iin_minus},
        )

    return CompiledDevice(comp.id, stamps, None, state)


def _compile_switch_spst(comp, netmap, alloc):
    n1 = netmap.net_id_of(comp.terminal("1"))
    n2 = netmap.net_id_of(comp.terminal("2"))
    closed = property_value(comp, "state") == "closed"
    if not closed:
        def state_open(acc):
            return ElementState(kind=comp.kind, voltage=None, current=0.0,
                                power=0.0, pin_currents={"1": 0.0, "2": 0.0})
        return CompiledDevice(comp.id, [], None, state_open)
    stamps, state = _two_pin_resistance(comp, netmap, ("1", "2"), SWITCH_ON_RES)
    return CompiledDevice(comp.id, stamps, None, state)


def _compile_switch_spdt(comp, netmap, alloc):
    ncom = netmap.net_id_of(comp.terminal("com"))
    sel = property_value(comp, "selected")
    nsel = netmap.net_id_of(comp.terminal(sel))
    g = 1.0 / SWITCH_ON_RES
    idle = "b" if sel == "a" else "a"

    def state(acc):
        v = acc.voltage(ncom) - acc.voltage(nsel)
        i = g * v
        return ElementState(kind=comp.kind, voltage=v, current=i, power=v * i,
                            pin_currents={"com": i, sel: -i, idle: 0.0})

    return CompiledDevice(comp.id, [Conductance(ncom, nsel, g)], None, state)


def _compile_diode(comp, netmap, alloc):
    na = netmap.net_id_of(comp.terminal("anode"))
    nc = netmap.net_id_of(comp.terminal("cathode"))
    elem = DiodeElement(comp.id, comp.kind, na, nc,
                        _num(comp, "saturation_current"),
                        _num(comp, "emission_coefficient"))

    def state(acc):
        pins = elem.currents(acc.voltage)
        vd = acc.voltage(na) - acc.voltage(nc)
        return ElementState(kind=comp.kind, voltage=vd, current=pins["anode"],
                            power=vd * pins["anode"], pin_currents=pins)

    return CompiledDevice(comp.id, [], elem, state)


def _compile_capacitor(comp, netmap, alloc):
    pins = ("+", "-") if registry_lookup(comp.kind).limits.polarized else ("1", "2")
    np_ = netmap.net_id_of(comp.terminal(pins[0]))
    nm_ = netmap.net_id_of(comp.terminal(pins[1]))

    def state(acc):
        v = acc.voltage(np_) - acc.voltage(nm_)
        return ElementState(kind=comp.kind, voltage=v, current=0.0, power=0.0,
                            pin_currents={pins[0]: 0.0, pins[1]: 0.0})

    return CompiledDevice(comp.id, [], None, state)


def _compile_inductor(comp, netmap, alloc):
    n1 = netmap.net_id_of(comp.terminal("1"))
    n2 = netmap.net_id_of(comp.terminal("2"))
    stamps = [VoltageSourceBranch(n1, n2, 0.0, comp.id)]

    def state(acc):
        i = acc.branch_current(comp.id)
        v = acc.voltage(n1) - acc.voltage(n2)
        return ElementState(kind=comp.kind, voltage=v, current=i, power=v * i,
                            pin_currents={"1": i, "2": -i})

    return CompiledDevice(comp.id, stamps, None, state)


def _compile_bjt(comp, netmap, alloc):
    nb = netmap.net_id_of(comp.terminal("base"))
    nc = netmap.net_id_of(comp.terminal("collector"))
    ne = netmap.net_id_of(comp.terminal("emitter"))
    elem = BjtElement(comp.id, nb, nc, ne,
                      _num(comp, "saturation_current"),
                      _num(comp, "forward_beta"), _num(comp, "reverse_beta"))

    def state(acc):
        pins = elem.currents(acc.voltage)
        power = sum(acc.voltage(n) * pins[p]
                    for n, p in ((nb, "base"), (nc, "collector"), (ne, "emitter")))
        return ElementState(
            kind=comp.kind, voltage=None, current=pins["collector"], power=power,
            pin_currents=pins,
            extra={"vbe": acc.voltage(nb) - acc.voltage(ne),
                   "vbc": acc.voltage(nb) - acc.voltage(nc)},
        )

    return CompiledDevice(comp.id, [], elem, state)


def _compile_nmos(comp, netmap, alloc):
    ng = netmap.net_id_of(comp.terminal("gate"))
    nd = netmap.net_id_of(comp.terminal("drain"))
    ns = netmap.net_id_of(comp.terminal("source"))
    elem = NmosElement(comp.id, ng, nd, ns,
                       _num(comp, "threshold_voltage"),
                       _num(comp, "transconductance"))

    def state(acc):
        pins = elem.currents(acc.voltage)
        vds = acc.voltage(nd) - acc.voltage(ns)
        return ElementState(
            kind=comp.kind, voltage=vds, current=pins["drain"],
            power=vds * pins["drain"], pin_currents=pins,
            extra={"vgs": acc.voltage(ng) - acc.voltage(ns), "vds": vds},
        )

    return CompiledDevice(comp.id, [], elem, state)


def _compile_nand(comp, netmap, alloc):
    nvdd = netmap.net_id_of(comp.terminal("VDD"))
    nvss = netmap.net_id_of(comp.terminal("VSS"))
    na = netmap.net_id_of(comp.terminal("A_in"))
    nb = netmap.net_id_of(comp.terminal("B_in"))
    nout = netmap.net_id_of(comp.terminal("OUT"))
    gin = 1.0 / _num(comp, "input_resistance")
    elem = NandElement(comp.id, nvdd, nvss, na, nb, nout,
                       _num(comp, "output_resistance"))
    stamps = [Conductance(na, nvss, gin), Conductance(nb, nvss, gin)]

    def state(acc):
        out = elem.currents(acc.voltage)
        ia = gin * (acc.voltage(na) - acc.voltage(nvss))
        ib = gin * (acc.voltage(nb) - acc.voltage(nvss))
        pins = {"A_in": ia, "B_in": ib, "OUT": out["OUT"],
                "VSS": out["VSS"] - ia - ib, "VDD": 0.0}
        power = sum(acc.voltage(n) * pins[p]
                    for n, p in ((nvdd, "VDD"), (nvss, "VSS"), (na, "A_in"),
                                 (nb, "B_in"), (nout, "OUT")))
        f, _, _ = elem.open_circuit(acc.voltage(nvdd), acc.voltage(nvss),
                                    acc.voltage(na), acc.voltage(nb))
        return ElementState(kind=comp.kind, voltage=None, current=out["OUT"],
                            power=power, pin_currents=pins,
                            extra={"open_circuit_out": f})

    return CompiledDevice(comp.id, stamps, elem, state)


def ir_output_volts(distance_cm: float) -> float:
    """Distance-to-voltage curve of the reflective IR sensor output."""
    return min(3.1, max(0.4, 27.86 / (distance_cm + 0.42)))


def _compile_ir_sensor(comp, netmap, alloc):
    nvcc = netmap.net_id_of(comp.terminal("VCC"))
    ngnd = netmap.net_id_of(comp.terminal("GND"))
    nout = netmap.net_id_of(comp.terminal("OUT"))
    rout = _num(comp, "output_resistance")
    vsrc = ir_output_volts(_num(comp, "distance_cm"))
    nint = alloc.node(comp.id, "out")
    stamps = [VoltageSourceBranch(nint, ngnd, vsrc, comp.id),
              Conductance(nout, nint, 1.0 / rout)]

    def state(acc):
        iout = (acc.voltage(nout) - acc.voltage(nint)) / rout
        ignd = -acc.branch_current(comp.id)
        pins = {"VCC": 0.0, "GND": ignd, "OUT": iout}
        supply = acc.voltage(nvcc) - acc.voltage(ngnd)
        power = acc.voltage(nout) * iout + acc.voltage(ngnd) * ignd
        return ElementState(kind=comp.kind, voltage=supply, current=iout,
                            power=power, pin_currents=pins,
                            extra={"source_volts": vsrc})

    return CompiledDevice(comp.id, stamps, None, state)


def _compile_ground(comp, netmap, alloc):
    def state(acc):
        return ElementState(kind="ground", pin_currents={"1": 0.0}, power=0.0)
    return CompiledDevice(comp.id, [], None, state)


def _compile_multimeter(comp, netmap, alloc):
    from . import instruments  # deferred: instruments imports this module
    return instruments.compile_meter(comp, netmap)


def compile_device(instance: ComponentInstance, netmap: NetMap,
                   alloc: NodeAllocator) -> CompiledDevice:
    """Turn one instance into stamps, nonlinear element, and state extractor."""
    descriptor = registry_lookup(instance.kind)
    if not descriptor.simulatable:
        raise NotSimulatableError(
            f"kind {instance.kind!r} has no DC model", subject=instance.id)
    return _COMPILERS[instance.kind](instance, netmap, alloc)


def stamp_linear(instance: ComponentInstance, netmap: NetMap,
                 alloc: NodeAllocator | None = None) -> list:
    """Linear stamps for one instance (empty for purely nonlinear kinds)."""
    if alloc is None:
        alloc = NodeAllocator(netmap)
    return compile_device(instance, netmap, alloc).linear


def eval_nonlinear(instance: ComponentInstance, netmap: NetMap,
                   voltages: dict) -> Companion | None:
    """One-shot companion evaluation at the given net voltages.

    A fresh element is built per call, so no junction-limiting history
    applies; mainly for tests and tooling. Returns None for linear kinds.
    """
    compiled = compile_device(instance, netmap, NodeAllocator(netmap))
    if compiled.element is None:
        return None
    return compiled.element.eval(lambda n: voltages.get(n, 0.0))


# --------------------------------------------------------------------------
# registry entries

_register(DeviceDescriptor(
    "resistor", ("1", "2"),
    (_p("resistance", OMEGA, 1000.0, 1e-6, 1e9),
     _p("max_power", "W", 0.25, 1e-6, 1e3)),
    limits=LimitSet(max_power=0.25),
), _compile_resistor, lambda p: LimitSet(max_power=p("max_power")))

_register(DeviceDescriptor(
    "potentiometer", ("1", "wiper", "2"),
    (_p("max_resistance", OMEGA, 10e3, 1e-3, 1e9),
     _p("position", "", 0.5, 0.0, 1.0),
     _p("max_power", "W", 0.25, 1e-6, 1e3)),
    limits=LimitSet(max_power=0.25),
), _compile_potentiometer, lambda p: LimitSet(max_power=p("max_power")))

_register(DeviceDescriptor(
    "battery", ("+", "-"),
    (_p("voltage", "V", 9.0, 0.0, 1e3),
     _p("internal_resistance", OMEGA, 0.5, 0.0, 1e6),
     _p("max_current", "A", 2.0, 1e-9, 1e6)),
    limits=LimitSet(max_current=2.0),
), _compile_source, lambda p: LimitSet(max_current=p("max_current")))

_register(DeviceDescriptor(
    "dc_supply", ("+", "-"),
    (_p("voltage", "V", 5.0, 0.0, 1e3),
     _p("internal_resistance", OMEGA, 0.5, 0.0, 1e6),
     _p("max_current", "A", 2.0, 1e-9, 1e6)),
    limits=LimitSet(max_current=2.0),
), _compile_source, lambda p: LimitSet(max_current=p("max_current")))

_register(DeviceDescriptor(
    "switch_spst", ("1", "2"),
    (_p("state", "", "open", choices=("open", "closed")),),
), _compile_switch_spst)

_register(DeviceDescriptor(
    "switch_spdt", ("com", "a", "b"),
    (_p("selected", "", "a", choices=("a", "b")),),
), _compile_switch_spdt)

_register(DeviceDescriptor(
    "diode", ("anode", "cathode"),
    (_p("saturation_current", "A", 1e-14, 1e-21, 1e-3),
     _p("emission_coefficient", "", 1.0, 0.1, 10.0),
     _p("max_current", "A", 1.0, 1e-9, 1e3)),
    limits=LimitSet(max_current=1.0),
), _compile_diode, lambda p: LimitSet(max_current=p("max_current")))

_register(DeviceDescriptor(
    "led", ("anode", "cathode"),
    (_p("saturation_current", "A", 1e-18, 1e-21, 1e-3),
     _p("emission_coefficient", "", 2.0, 0.1, 10.0),
     _p("max_current", "A", 0.020, 1e-9, 1e3)),
    limits=LimitSet(max_current=0.020),
), _compile_diode, lambda p: LimitSet(max_current=p("max_current")))

_register(DeviceDescriptor(
    "ceramic_capacitor", ("1", "2"),
    (_p("capacitance", "F", 100e-9, 1e-15, 1.0),
     _p("max_voltage", "V", 50.0, 1e-3, 1e6)),
    limits=LimitSet(max_voltage=50.0),
), _compile_capacitor, lambda p: LimitSet(max_voltage=p("max_voltage")))

for _kind in ("electrolytic_capacitor", "tantalum_capacitor"):
    _register(DeviceDescriptor(
        _kind, ("+", "-"),
        (_p("capacitance", "F", 10e-6, 1e-15, 1.0),
         _p("max_voltage", "V", 16.0, 1e-3, 1e6),
         _p("max_reverse_voltage", "V", 0.3, 0.0, 1e3)),
        limits=LimitSet(max_voltage=16.0, polarized=True, max_reverse_voltage=0.3),
    ), _compile_capacitor,
        lambda p: LimitSet(max_voltage=p("max_voltage"), polarized=True,
                           max_reverse_voltage=p("max_reverse_voltage")))

_register(DeviceDescriptor(
    "inductor", ("1", "2"),
    (_p("inductance", "H", 1e-3, 1e-12, 1e3),
     _p("max_current", "A", 1.0, 1e-9, 1e3)),
    limits=LimitSet(max_current=1.0),
), _compile_inductor, lambda p: LimitSet(max_current=p("max_current")))

_register(DeviceDescriptor(
    "dc_motor", ("1", "2"),
    (_p("winding_resistance", OMEGA, 10.0, 1e-3, 1e6),
     _p("max_voltage", "V", 6.0, 1e-3, 1e6)),
    limits=LimitSet(max_voltage=6.0),
), _compile_dc_motor, lambda p: LimitSet(max_voltage=p("max_voltage")))

_register(DeviceDescriptor(
    "bjt_npn", ("base", "collector", "emitter"),
    (_p("saturation_current", "A", 1e-15, 1e-21, 1e-3),
     _p("forward_beta", "", 100.0, 0.1, 1e4),
     _p("reverse_beta", "", 1.0, 0.01, 1e3)),
), _compile_bjt)

_register(DeviceDescriptor(
    "nmos", ("gate", "drain", "source"),
    (_p("threshold_voltage", "V", 1.0, -100.0, 100.0),
     _p("transconductance", "A/V²", 1e-3, 1e-12, 1e3)),
), _compile_nmos)

_register(DeviceDescriptor(
    "nand_gate", ("VDD", "VSS", "A_in", "B_in", "OUT"),
    (_p("input_resistance", OMEGA, 10e6, 1.0, 1e12),
     _p("output_resistance", OMEGA, 200.0, 1e-3, 1e9),
     _p("out_max_current", "A", 0.010, 1e-9, 1e3)),
    limits=LimitSet(max_current=0.010),
), _compile_nand, lambda p: LimitSet(max_current=p("out_max_current")))

_register(DeviceDescriptor(
    "ir_sensor", ("VCC", "GND", "OUT"),
    (_p("distance_cm", "cm", 20.0, 4.0, 80.0),
     _p("output_resistance", OMEGA, 100.0, 1e-3, 1e9),
     _p("out_max_current", "A", 0.020, 1e-9, 1e3),
     _p("supply_max_voltage", "V", 5.5, 1e-3, 1e6),
     _p("supply_max_reverse_voltage", "V", 0.3, 0.0, 1e3)),
    limits=LimitSet(max_current=0.020, max_voltage=5.5, polarized=True,
                    max_reverse_voltage=0.3),
), _compile_ir_sensor,
    lambda p: LimitSet(max_current=p("out_max_current"),
                       max_voltage=p("supply_max_voltage"), polarized=True,
                       max_reverse_voltage=p("supply_max_reverse_voltage")))

_register(DeviceDescriptor("ground", ("1",)), _compile_ground)

_register(DeviceDescriptor(
    "multimeter", (PIN_COM, PIN_VOHM, PIN_AMP),
    (_p("mode", "", "V_DC", choices=METER_MODES),
     _p("input_resistance", OMEGA, 10e6, 1.0, 1e12),
     _p("test_current", "A", 1e-3, 1e-12, 1.0)),
), _compile_multimeter)

# known part with no DC model: carried in sketches, excluded from solves
_register(DeviceDescriptor("arduino_uno", (), simulatable=False))


_MODEL_NOTES = {
    "resistor": "conductance 1/R",
    "potentiometer": "two series halves of max_resistance split by position, each half >= max_resistance/1000",
    "battery": "ideal source behind internal_resistance",
    "dc_supply": "ideal source behind internal_resistance",
    "switch_spst": "open: no stamp; closed: 1 m" + OMEGA + " contact",
    "switch_spdt": "1 m" + OMEGA + " contact com-selected throw",
    "diode": "Shockley junction, thermal voltage 25.85 mV",
    "led": "Shockley junction, thermal voltage 25.85 mV",
    "ceramic_capacitor": "open at DC",
    "electrolytic_capacitor": "open at DC, polarized",
    "tantalum_capacitor": "open at DC, polarized",
    "inductor": "DC short (0 V source branch carrying the current)",
    "dc_motor": "stalled winding resistance",
    "bjt_npn": "Ebers-Moll NPN (transport form)",
    "nmos": "level-1 square law, saturation K/2*(Vgs-Vth)^2, lambda 0",
    "nand_gate": "logistic output source behind output_resistance; inputs load input_resistance to VSS",
    "ir_sensor": "output source clamped to [0.4, 3.1] V above GND behind output_resistance",
    "ground": "marks its net as the reference node",
    "multimeter": "mode dependent; see instruments module",
    "arduino_uno": "not simulatable; excluded from the solve",
}


def reference_table_markdown() -> str:
    """Markdown table of every registered kind (committed under docs/)."""
    lines = [
        "# Device reference",
        "",
        "Generated by `circsim.devices.reference_table_markdown()`; "
        "regenerate with `circsim devices --markdown`.",
        "",
        "| kind | pins | properties (default) | DC model | limits |",
        "|---|---|---|---|---|",
    ]
    for kind in sorted(REGISTRY):
        d = REGISTRY[kind]
        pins = ", ".join(d.pins) if d.pins else "(from placements)"
        props = "; ".join(
            f"{p.name}={p.default}{(' ' + p.unit) if p.unit else ''}"
            for p in d.properties) or "-"
        lim = d.limits
        limits = []
        if lim.max_current is not None:
            limits.append(f"max current {lim.max_current} A")
        if lim.max_power is not None:
            limits.append(f"max power {lim.max_power} W")
        if lim.max_voltage is not None:
            limits.append(f"max voltage {lim.max_voltage} V")
        if lim.polarized:
            limits.append(f"polarized, reverse limit {lim.max_reverse_voltage} V")
        model = _MODEL_NOTES.get(kind, "-") if d.simulatable else "none (excluded)"
        lines.append(f"| {kind} | {pins} | {props} | {model} | "
                     f"{'; '.join(limits) or '-'} |")
    return "\n".join(lines) + "\n"
