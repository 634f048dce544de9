"""Exception hierarchy. Every failure mode the CLI maps to an exit code lives here."""


class CritGSError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(CritGSError, ValueError):
    pass


class InvalidParameterError(CritGSError, ValueError):
    pass


class InvalidInputError(CritGSError, ValueError):
    pass


class OutOfRangeError(CritGSError, ValueError):
    pass


class DivergentNormError(CritGSError, ArithmeticError):
    """A requested integral does not converge on R^d."""


class IncompleteProfileError(CritGSError, ValueError):
    """A profile lacks the tail model needed for the requested operation."""


class SolverError(CritGSError, RuntimeError):
    pass


class StiffnessError(SolverError):
    pass


class NoGroundStateError(SolverError):
    pass


class IterationLimitError(SolverError):
    pass


class WitnessNotFoundError(CritGSError, RuntimeError):
    pass


class InconclusiveError(CritGSError, RuntimeError):
    """A certification could not be decided at the requested resolution."""


class ConfigError(CritGSError, ValueError):
    """Malformed or unknown configuration keys."""
