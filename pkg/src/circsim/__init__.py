"""circsim: an educational DC circuit simulator for virtual breadboards.

Sketches place parts on breadboards, wires and tie points join terminals
into nets, and the solver finds the DC operating point. Multimeters are
simulated parts with real burden, and parts pushed past their ratings
report smoke events instead of silently clipping.
"""

__version__ = "0.1.0"

from .core import (
    BreadboardSpec,
    ComponentInstance,
    Diagnostic,
    HoleLocation,
    Net,
    NetMap,
    RailLocation,
    Sketch,
    Terminal,
    TerminalLocation,
    Wire,
    extract_nets,
    validate_sketch,
)
from .devices import limits_for, property_value, registry_lookup
from .errors import (
    NoConvergenceError,
    NotSimulatableError,
    SimError,
    SingularMatrixError,
    SketchFormatError,
    UnknownSessionError,
    UnknownTerminalError,
)
from .failures import SmokeEvent, check_failures
from .instruments import Reading, compute_reading, format_display, meter_config
from .pipeline import SimulationResult, simulate
from .sketchio import (
    export_netlist,
    parse_sketch,
    render_report,
    serialize_sketch,
    sketch_from_json,
    sketch_to_json,
)
from .solver import Solution, SolveOptions, solve_op

__all__ = [
    "BreadboardSpec",
    "ComponentInstance",
    "Diagnostic",
    "HoleLocation",
    "Net",
    "NetMap",
    "RailLocation",
    "Sketch",
    "Terminal",
    "TerminalLocation",
    "Wire",
    "extract_nets",
    "validate_sketch",
    "limits_for",
    "property_value",
    "registry_lookup",
    "NoConvergenceError",
    "NotSimulatableError",
    "SimError",
    "SingularMatrixError",
    "SketchFormatError",
    "UnknownSessionError",
    "UnknownTerminalError",
    "SmokeEvent",
    "check_failures",
    "Reading",
    "compute_reading",
    "format_display",
    "meter_config",
    "SimulationResult",
    "simulate",
    "export_netlist",
    "parse_sketch",
    "render_report",
    "serialize_sketch",
    "sketch_from_json",
    "sketch_to_json",
    "Solution",
    "SolveOptions",
    "solve_op",
    "__version__",
]
