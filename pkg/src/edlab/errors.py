"""
--------------------------------------------------------------------------------
PURPOSE:     Exception hierarchy shared by every edlab module.
             ConfigError maps to exit code 2, NumericalAbort to exit code 3.
--------------------------------------------------------------------------------
"""


class EdlabError(Exception):
    """Base class for all edlab failures."""


class ConfigError(EdlabError, ValueError):
    """Invalid experiment configuration, always tied to a key path."""

    def __init__(self, key_path: str, message: str, line: int = None):
        self.key_path = key_path
        self.line = line
        self.message = message
        where = f"{key_path} (line {line})" if line else key_path
        super().__init__(f"{where}: {message}")


# --- grid / state preconditions ---

class GridError(EdlabError, ValueError):
    """Point count or bounds cannot form a periodic grid."""


class GridMismatchError(EdlabError, ValueError):
    """Two fields live on different grids."""


class GridResolutionError(EdlabError, ValueError):
    """A requested feature is narrower than the grid resolves."""


class PacketTooWideError(EdlabError, ValueError):
    """An analytic packet does not fit inside the domain."""


class StateError(EdlabError, ValueError):
    """A wavefunction or density violates its invariants."""


class DegenerateStateError(StateError):
    """Negative, empty or unnormalized density."""


class BoundaryLeakageError(StateError):
    """Density reached the periodic edges of the domain."""


# --- numeric aborts (exit code 3) ---

class NumericalAbort(EdlabError, ArithmeticError):
    """A run cannot continue; partial artifacts are still written."""


class NonFiniteStateError(NumericalAbort):
    """NaN or inf appeared in the evolved state."""


class QuantumPotentialOverflow(NumericalAbort):
    """The quantum potential blew up, usually at an under-resolved node."""


class CFLViolation(NumericalAbort):
    """Courant number above the upwind stability limit."""


class IdentityViolation(NumericalAbort):
    """Two representations of the same moment disagree."""


class TimeStepMismatch(NumericalAbort):
    """States handed to a residual are not one step apart."""
