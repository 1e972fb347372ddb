class PhaseForgeError(Exception):
    """Base class for every error raised by phaseforge."""
    exit_code = 1


class ConfigError(PhaseForgeError):
    """Raised when a run configuration is invalid."""
    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(PhaseForgeError, ValueError):
    """Raised when a parameter or state violates a precondition."""
    exit_code = 3


class NumericalError(PhaseForgeError):
    """Raised when a computation fails to meet its tolerance or diverges."""
    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BracketError(NumericalError):
    """No sign change in the bracket handed to a scalar root finder."""


class BlowUpError(NumericalError):
    """The solution left its admissible window."""


class BoundaryError(PhaseForgeError):
    """Boundary data admit no steady lifting."""
    exit_code = 5


class OrientationError(PhaseForgeError):
    """Interface measurements and profile disagree on orientation."""
    exit_code = 6
