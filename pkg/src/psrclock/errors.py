"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: validation problems exit 2,
numerical and precondition failures exit 3.
"""


class PsrError(Exception):
    """Base class for every error raised by psrclock."""


class ValidationError(PsrError, ValueError):
    """An input field is out of its valid domain; ``field`` names it."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NetlistError(ValidationError):
    """Syntax or semantic error in a netlist, with source position."""

    def __init__(self, message, line=None, col=None, source="<string>",
                 field=None):
        super().__init__(message, field=field)
        self.message = message
        self.line = line
        self.col = col
        self.source = source

    def diagnostic(self):
        if self.line is None:
            return f"{self.source}: {self.message}"
        return f"{self.source}:{self.line}:{self.col or 1}: {self.message}"

    def __str__(self):
        return self.diagnostic()


class ConfigurationError(PsrError, ValueError):
    """Simulation configuration is inconsistent with the network."""


class NumericalError(PsrError, ArithmeticError):
    """The integrator produced a non-finite state."""


class PreconditionError(PsrError, ValueError):
    """An operation was called outside its documented domain."""


class RangeError(PreconditionError):
    """A value lies outside a characterized range (no extrapolation)."""


class UnsupportedRegimeError(PreconditionError):
    """The closed-form solver only covers underdamped tanks."""
