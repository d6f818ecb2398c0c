"""DC operating-point solver.

Assembles modified nodal analysis systems from device stamps, solves them
with dense LU (partial pivoting), and iterates Newton-Raphson over the
nonlinear companions. When plain iteration fails it falls back to gmin
stepping and then source stepping, warm-starting each rung.

Every node row receives a gmin conductance to the reference node, so
sketches made of several galvanically separate subcircuits still produce
one well-posed system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NetMap, Sketch
from .devices import (
    Companion,
    CompiledDevice,
    Conductance,
    CurrentSource,
    ElementState,
    NodeAllocator,
    VoltageSourceBranch,
    compile_device,
    registry_lookup,
)
from .errors import NoConvergenceError, NotSimulatableError, SingularMatrixError

PIVOT_FLOOR = 1e-13
GMIN_START = 1e-2


@dataclass(frozen=True)
class SolveOptions:
    reltol: float = 1e-3
    vntol: float = 1e-6
    abstol: float = 1e-12
    max_newton_iters: int = 100
    gmin: float = 1e-12
    gmin_steps: int = 10
    source_steps: int = 10


@dataclass
class MnaSystem:
    """One assembled linear system plus its row bookkeeping."""

    matrix: np.ndarray
    rhs: np.ndarray
    node_index: dict
    branch_index: dict
    row_labels: list

    @property
    def n_nodes(self) -> int:
        return len(self.node_index)

    @property
    def n_branches(self) -> int:
        return len(self.branch_index)


@dataclass
class Solution:
    converged: bool
    iterations: int
    strategy: str
    node_voltages: dict
    branch_currents: dict
    element_states: dict


class _Accessor:
    """Maps net/branch ids onto one solution vector (reference reads 0 V)."""

    def __init__(self, x, node_index, branch_index):
        self.x = x
        self.node_index = node_index
        self.branch_index = branch_index

    def voltage(self, net_id: int) -> float:
        row = self.node_index.get(net_id)
        return 0.0 if row is None else float(self.x[row])

    def branch_current(self, branch_id: str) -> float:
        return float(self.x[self.branch_index[branch_id]])


@dataclass
class CompiledCircuit:
    devices: list
    stamps: list
    elements: list
    excluded: list
    netmap: NetMap
    alloc: NodeAllocator


def compile_sketch(sketch: Sketch, netmap: NetMap) -> CompiledCircuit:
    """Compile every component, collecting the ones without a DC model."""
    devices_out, stamps, elements, excluded = [], [], [], []
    alloc = NodeAllocator(netmap)
    for comp in sorted(sketch.components, key=lambda c: c.id):
        try:
            compiled = compile_device(comp, netmap, alloc)
        except NotSimulatableError:
            excluded.append(comp.id)
            continue
        devices_out.append((comp, compiled))
        stamps.extend(compiled.linear)
        if compiled.element is not None:
            elements.append(compiled.element)
    return CompiledCircuit(devices_out, stamps, elements, excluded, netmap, alloc)


def _row_plan(stamps, netmap):
    """Deterministic unknown ordering: nets, internal nodes, then branches."""
    ground = {n.net_id for n in netmap.nets if n.is_ground}
    nodes = {n.net_id for n in netmap.nets} - ground
    branches = []
    for st in stamps:
        if isinstance(st, VoltageSourceBranch):
            branches.append(st.branch_id)
        for net in _stamp_nets(st):
            if net not in ground:
                nodes.add(net)
    node_ids = sorted(nodes)
    node_index = {nid: i for i, nid in enumerate(node_ids)}
    branch_index = {bid: len(node_ids) + i for i, bid in enumerate(sorted(branches))}
    labels = [f"net {nid}" for nid in node_ids]
    labels += [f"branch {bid}" for bid in sorted(branches)]
    return node_index, branch_index, labels, ground


def _stamp_nets(st):
    if isinstance(st, Conductance):
        return (st.net_a, st.net_b)
    if isinstance(st, VoltageSourceBranch):
        return (st.net_plus, st.net_minus)
    return (st.net_from, st.net_to)


def assemble(stamps, companions, netmap: NetMap, opts: SolveOptions,
             gmin: float | None = None, source_scale: float = 1.0) -> MnaSystem:
    """Build the MNA matrix and right-hand side.

    ``gmin`` overrides opts.gmin during gmin stepping; ``source_scale``
    multiplies every independent source value during source stepping.
    """
    if gmin is None:
        gmin = opts.gmin
    node_index, branch_index, labels, _ground = _row_plan(stamps, netmap)
    n = len(node_index) + len(branch_index)
    a = np.zeros((n, n))
    rhs = np.zeros(n)
    row = node_index.get

    for st in stamps:
        if isinstance(st, Conductance):
            ra, rb = row(st.net_a), row(st.net_b)
            g = st.siemens
            if ra is not None:
                a[ra, ra] += g
            if rb is not None:
                a[rb, rb] += g
            if ra is not None and rb is not None:
                a[ra, rb] -= g
                a[rb, ra] -= g
        elif isinstance(st, VoltageSourceBranch):
            rb = branch_index[st.branch_id]
            rp, rm = row(st.net_plus), row(st.net_minus)
            if rp is not None:
                a[rp, rb] += 1.0
                a[rb, rp] += 1.0
            if rm is not None:
                a[rm, rb] -= 1.0
                a[rb, rm] -= 1.0
            rhs[rb] += st.volts * source_scale
        else:
            rf, rt = row(st.net_from), row(st.net_to)
            if rf is not None:
                rhs[rf] -= st.amperes * source_scale
            if rt is not None:
                rhs[rt] += st.amperes * source_scale

    for comp in companions:
        for rnet, cnet, j in comp.jac:
            r, c = row(rnet), row(cnet)
            if r is not None and c is not None:
                a[r, c] += j
        for rnet, val in comp.rhs:
            r = row(rnet)
            if r is not None:
                rhs[r] += val

    for i in range(len(node_index)):
        a[i, i] += gmin

    return MnaSystem(a, rhs, node_index, branch_index, labels)


def solve_linear(system: MnaSystem) -> np.ndarray:
    """Dense LU with partial pivoting.

    Any pivot magnitude below PIVOT_FLOOR raises SINGULAR, naming the
    unknown of the offending column.
    """
    n = system.matrix.shape[0]
    if n == 0:
        return np.zeros(0)
    m = system.matrix.astype(float, copy=True)
    x = system.rhs.astype(float, copy=True)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(m[k:, k])))
        if abs(m[piv, k]) < PIVOT_FLOOR:
            raise SingularMatrixError(
                f"matrix is singular at {system.row_labels[k]} "
                f"(pivot {m[piv, k]:.3e})",
                subject=system.row_labels[k])
        if piv != k:
            m[[k, piv]] = m[[piv, k]]
            x[[k, piv]] = x[[piv, k]]
        factors = m[k + 1:, k] / m[k, k]
        m[k + 1:, k + 1:] -= np.outer(factors, m[k, k + 1:])
        x[k + 1:] -= factors * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - m[k, k + 1:] @ x[k + 1:]) / m[k, k]
    return x


def _newton(compiled: CompiledCircuit, opts: SolveOptions, gmin: float,
            source_scale: float, x0: np.ndarray | None):
    """One Newton-Raphson run at fixed gmin and source scale.

    Returns (converged, x, iterations, last_system). Convergence requires
    node deltas within vntol/reltol and element currents within
    abstol/reltol on two consecutive iterations; the extra confirming
    iteration drives the companion-vs-true-current error far below the
    bookkeeping tolerances.
    """
    stamps, elements, netmap = compiled.stamps, compiled.elements, compiled.netmap

    if not elements:
        system = assemble(stamps, [], netmap, opts, gmin=gmin,
                          source_scale=source_scale)
        return True, solve_linear(system), 1, system

    node_index, branch_index, _labels, _g = _row_plan(stamps, netmap)
    size = len(node_index) + len(branch_index)
    x = np.zeros(size) if x0 is None else x0.copy()
    n_nodes = len(node_index)

    prev_currents = None
    streak = 0
    system = None
    for iteration in range(1, opts.max_newton_iters + 1):
        acc = _Accessor(x, node_index, branch_index)
        companions = [el.eval(acc.voltage) for el in elements]
        system = assemble(stamps, companions, netmap, opts, gmin=gmin,
                          source_scale=source_scale)
        x_new = solve_linear(system)

        dv = np.abs(x_new[:n_nodes] - x[:n_nodes])
        scale = np.maximum(np.abs(x_new[:n_nodes]), np.abs(x[:n_nodes]))
        v_ok = bool(np.all(dv <= opts.vntol + opts.reltol * scale))

        currents = [i for comp in companions for i in comp.conv_currents]
        i_ok = prev_currents is not None and all(
            abs(i1 - i0) <= opts.abstol + opts.reltol * max(abs(i0), abs(i1))
            for i0, i1 in zip(prev_currents, currents))
        # a step-limited element is mid-walk even when deltas look settled
        limited = any(comp.limited for comp in companions)

        x, prev_currents = x_new, currents
        streak = streak + 1 if (v_ok and i_ok and not limited) else 0
        if streak >= 2:
            return True, x, iteration, system
    return False, x, opts.max_newton_iters, system


def solve_op(sketch: Sketch, netmap: NetMap,
             options: SolveOptions | None = None) -> Solution:
    """Find the DC operating point of a sketch.

    Tries plain Newton first, then gmin stepping (GMIN_START decading
    down to opts.gmin), then source stepping (sources scaled 0 to 1),
    each rung warm-started from the previous one. Raises
    NoConvergenceError when every strategy is exhausted and
    SingularMatrixError when the system is structurally singular.
    """
    opts = options or SolveOptions()
    compiled = compile_sketch(sketch, netmap)

    last_singular: SingularMatrixError | None = None
    last_system = None
    last_x = None
    total_iterations = 0

    def finish(x, strategy, iterations):
        node_index, branch_index, _labels, _g = _row_plan(compiled.stamps, netmap)
        acc = _Accessor(x, node_index, branch_index)
        node_voltages = {net.net_id: acc.voltage(net.net_id) for net in netmap.nets}
        branch_currents = {bid: float(x[r]) for bid, r in branch_index.items()}
        states = {}
        for comp, dev in compiled.devices:
            states[comp.id] = dev.state_fn(acc)
        for comp in sketch.components:
            if comp.id in compiled.excluded:
                states[comp.id] = ElementState(kind=comp.kind, excluded=True)
        return Solution(True, iterations, strategy, node_voltages,
                        branch_currents, states)

    def reset_elements():
        for el in compiled.elements:
            el.reset()

    # strategy 1: plain Newton from all zeros
    reset_elements()
    try:
        ok, x, iters, system = _newton(compiled, opts, opts.gmin, 1.0, None)
        total_iterations += iters
        last_system, last_x = system, x
        if ok:
            return finish(x, "direct", total_iterations)
    except SingularMatrixError as exc:
        last_singular = exc

    # strategy 2: gmin stepping
    exps = np.linspace(math.log10(GMIN_START), math.log10(opts.gmin),
                       max(opts.gmin_steps, 2))
    ladder = [10.0 ** e for e in exps]
    ladder[-1] = opts.gmin
    reset_elements()
    try:
        x = None
        ok = False
        for g in ladder:
            ok, x, iters, system = _newton(compiled, opts, g, 1.0, x)
            total_iterations += iters
            last_system, last_x = system, x
            if not ok:
                break
        if ok:
            return finish(x, "gmin_stepping", total_iterations)
    except SingularMatrixError as exc:
        last_singular = exc

    # strategy 3: source stepping
    reset_elements()
    try:
        x = None
        ok = False
        for scale in np.linspace(0.0, 1.0, opts.source_steps + 1)[1:]:
            ok, x, iters, system = _newton(compiled, opts, opts.gmin,
                                           float(scale), x)
            total_iterations += iters
            last_system, last_x = system, x
            if not ok:
                break
        if ok:
            return finish(x, "source_stepping", total_iterations)
    except SingularMatrixError as exc:
        last_singular = exc

    if last_system is None or last_x is None:
        # every attempt died before producing a solvable system
        raise last_singular or NoConvergenceError(
            "operating point not found", residual=float("nan"))
    residual = float(np.linalg.norm(last_system.matrix @ last_x - last_system.rhs))
    raise NoConvergenceError(
        f"no operating point after {total_iterations} Newton iterations "
        f"(last residual {residual:.3e})",
        residual=residual, iterations=total_iterations)
