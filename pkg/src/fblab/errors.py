"""Exception taxonomy shared across the package.

Two families matter for the CLI exit codes: invalid input (exit 2) and
numerical failures (exit 3).
"""


class FbLabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FbLabError, ValueError):
    """Bad user input: out-of-range parameters, malformed configs, unknown keys."""


class NumericsError(FbLabError, RuntimeError):
    """A numerical routine failed to deliver its contract."""


class NumericalDomainError(NumericsError):
    """A map was evaluated where it is not finite."""


class RootNotFoundError(NumericsError):
    """Bracketing failed: no sign change in the search interval."""


class SingularStateError(NumericsError):
    """ODE right-hand side evaluated at a (near-)singular state."""


class IntegrationFailureError(NumericsError):
    """Adaptive integration stalled (step-size underflow)."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class NoZeroError(NumericsError):
    """The profile stayed positive: no zero before the polar guard."""


class AccuracyError(NumericsError):
    """Quadrature or cross-check did not reach the requested tolerance."""


class MeshError(NumericsError):
    """Degenerate or non-manifold mesh input."""


class DomainError(NumericsError):
    """Query point outside the domain of validity of an evaluation."""


class StepSizeFailureError(NumericsError):
    """Line search could not decrease the energy."""
