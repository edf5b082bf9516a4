"""Exception hierarchy.

Parameter problems and numerical failures are kept apart because the CLI maps
them to different exit codes (2 and 3).
"""


class RatchetError(Exception):
    pass


class ParameterError(RatchetError, ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(RatchetError, ArithmeticError):
    """A computation left its valid numerical range."""


class StabilityError(NumericalError):
    """An explicit finite-difference coefficient left [0, 1]."""


class TruncationError(NumericalError):
    """Tail truncation discarded more mass than the audit budget allows."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap."""
