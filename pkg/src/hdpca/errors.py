"""Error taxonomy shared across the package.

Two classes cover everything: bad inputs (caller's fault) and numerical
breakdown (data's fault). Keeping the split coarse makes CLI exit-code
mapping trivial.
"""


class HdpcaError(Exception):
    """Base class for package errors."""


class InputError(HdpcaError):
    """Raised when an argument violates a documented precondition."""


class NumericalError(HdpcaError):
    """Raised when a computation fails for numerical reasons
    (non-convergence, eigenvalues too negative to clamp, ...)."""


class SweepError(HdpcaError):
    """Raised when a Monte Carlo sweep exceeds its failed-replicate budget."""
