"""Exception hierarchy shared by every module."""


class BellmarkError(Exception):
    """Base class for all library errors."""


class ValidationError(BellmarkError, ValueError):
    """Invalid user input. ``field`` names the offending field when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

    def __str__(self):
        msg = super().__str__()
        if self.field:
            return f"{self.field}: {msg}"
        return msg


class ContractViolation(ValidationError):
    """An operation was called with inputs outside its precondition."""


class DimensionCapError(BellmarkError):
    """Requested Hilbert-space dimension exceeds the configured cap."""


class IncompleteDataError(ValidationError):
    """A correlation record lacks a required setting string."""


class NumericalHealthError(BellmarkError):
    """Floating-point drift beyond what the algorithm tolerates."""


class UnsupportedDimensionError(ValidationError):
    """Operation only defined for a restricted set of local dimensions."""


class ConstructionError(BellmarkError):
    """An explicit construction failed to meet its target."""
