"""Exception types shared across the simulator."""


class CoordPlayError(Exception):
    """Base class for all library errors."""


class InvalidInputError(CoordPlayError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class NumericalInstabilityError(CoordPlayError, ArithmeticError):
    """An internal quantity left its mathematically valid range by more
    than the accepted floating-point tolerance."""


class ProtocolViolationError(CoordPlayError, RuntimeError):
    """A player state machine observed something impossible under a
    correct counterpart (only raised in strict mode)."""


class LossFileError(InvalidInputError):
    """A loss file failed to parse; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
