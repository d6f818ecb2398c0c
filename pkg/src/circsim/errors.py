"""Exception types shared across the simulator.

Every error carries a stable machine-readable ``code`` so the CLI and the
lab service can surface failures uniformly without string matching.
"""

from __future__ import annotations


class SimError(Exception):
    """Base class for simulator errors."""

    code = "SIM_ERROR"

    def __init__(self, message: str, **info):
        super().__init__(message)
        self.info = info


class UnknownTerminalError(SimError):
    code = "UNKNOWN_TERMINAL"


class NotSimulatableError(SimError):
    code = "NOT_SIMULATABLE"


class SingularMatrixError(SimError):
    """Raised when LU elimination meets a pivot below the floor.

    ``info["subject"]`` names the offending unknown (net id or branch id).
    """

    code = "SINGULAR"


class NoConvergenceError(SimError):
    """Raised when every operating-point strategy is exhausted.

    ``info["residual"]`` holds the last linear-system residual norm.
    """

    code = "NO_CONVERGENCE"


class UnknownSessionError(SimError):
    code = "UNKNOWN_SESSION"


class SketchFormatError(SimError):
    """Sketch text failed to parse or validate; carries diagnostics."""

    code = "INVALID_SKETCH"

    def __init__(self, diagnostics):
        first = diagnostics[0].message if diagnostics else "invalid sketch"
        super().__init__(first)
        self.diagnostics = list(diagnostics)
