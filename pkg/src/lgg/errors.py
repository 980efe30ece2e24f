"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class LggError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(LggError, ValueError):
    """Malformed data: wrong shapes, non-finite values, corrupt files."""


class InvalidParameter(LggError, ValueError):
    """A parameter outside its admissible range."""


class NumericalFailure(LggError, ArithmeticError):
    """A computation that cannot be carried out stably (e.g. singular system)."""
