"""End-to-end simulation: validate, net-extract, solve, read meters, smoke.

This is the one entry point the CLI and the live service share. A sketch
that fails structural validation raises; a sketch that is structurally
fine but electrically unsolvable comes back as a non-converged result so
interactive callers can keep the session alive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import NetMap, Sketch, extract_nets, validate_sketch
from .errors import NoConvergenceError, SingularMatrixError, SketchFormatError
from .failures import SmokeEvent, check_failures
from .instruments import (
    STATUS_UNSUPPORTED,
    Reading,
    compute_reading,
    meter_config,
)
from .solver import Solution, SolveOptions, solve_op


@dataclass
class SimulationResult:
    sketch: Sketch
    netmap: NetMap
    solution: Solution | None
    readings: list = field(default_factory=list)
    smoke_events: list = field(default_factory=list)
    failure: dict | None = None

    @property
    def converged(self) -> bool:
        return self.solution is not None and self.solution.converged

    def as_json(self) -> dict:
        out = {
            "name": self.sketch.name,
            "converged": self.converged,
            "nets": [_net_json(self, net) for net in self.netmap.nets],
            "readings": [r.as_json() for r in self.readings],
            "smoke": [e.as_json() for e in self.smoke_events],
        }
        if self.solution is not None:
            out["strategy"] = self.solution.strategy
            out["iterations"] = self.solution.iterations
            out["branch_currents"] = dict(sorted(
                self.solution.branch_currents.items()))
            out["elements"] = {
                cid: _state_json(st)
                for cid, st in sorted(self.solution.element_states.items())
            }
        if self.failure is not None:
            out["failure"] = self.failure
        return out


def _net_json(result: SimulationResult, net) -> dict:
    out = {
        "id": net.net_id,
        "ground": net.is_ground,
        "terminals": sorted(f"{t.component_id}.{t.pin_name}"
                            for t in net.terminals),
    }
    if result.solution is not None:
        out["volts"] = result.solution.node_voltages[net.net_id]
    return out


def _state_json(state) -> dict:
    out = {"kind": state.kind, "excluded": state.excluded}
    if state.excluded:
        return out
    for name in ("voltage", "current", "power"):
        value = getattr(state, name)
        if value is not None:
            out[name] = value
    out["pin_currents"] = dict(sorted(state.pin_currents.items()))
    if state.extra:
        out["extra"] = dict(sorted(state.extra.items()))
    return out


def meters_of(sketch: Sketch) -> list:
    return sorted((c for c in sketch.components if c.kind == "multimeter"),
                  key=lambda c: c.id)


def simulate(sketch: Sketch, options: SolveOptions | None = None,
             validate: bool = True) -> SimulationResult:
    """Run the full DC pipeline over one sketch.

    Raises SketchFormatError when validation finds structural problems.
    Solver failures (no convergence, singular system) do not raise; they
    produce a result with converged False, blank meter readings, and the
    failure recorded, since a live editing session routinely passes
    through unsolvable intermediate states.
    """
    if validate:
        diagnostics = validate_sketch(sketch)
        if diagnostics:
            raise SketchFormatError(diagnostics)
    netmap = extract_nets(sketch)
    opts = options or SolveOptions()
    failure = None
    try:
        solution = solve_op(sketch, netmap, opts)
    except (NoConvergenceError, SingularMatrixError) as exc:
        solution = None
        failure = {"code": exc.code, "message": str(exc)}

    result = SimulationResult(sketch, netmap, solution, failure=failure)
    for meter in meters_of(sketch):
        cfg = meter_config(meter)
        if solution is None:
            result.readings.append(
                Reading(meter.id, STATUS_UNSUPPORTED, None, "---"))
        else:
            result.readings.append(compute_reading(cfg, netmap, solution))
    if solution is not None:
        result.smoke_events = check_failures(sketch, result.solution)
    return result


def smoke_lines(events: list) -> list:
    return [e.text_line() for e in events]


__all__ = ["SimulationResult", "simulate", "meters_of", "smoke_lines",
           "SmokeEvent"]
