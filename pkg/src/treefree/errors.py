"""Exception hierarchy.

Every error carries the process exit code the command line should use, so the
CLI can map failures without inspecting message text.
"""


class TreeFreeError(Exception):
    exit_code = 1


class ValidationError(TreeFreeError, ValueError):
    exit_code = 2


class NumericalError(TreeFreeError, ArithmeticError):
    exit_code = 3


class SizeLimitError(TreeFreeError):
    exit_code = 4


class InvalidLetterError(ValidationError):
    pass


class InvalidTreeError(ValidationError):
    pass


class InvalidPermutationError(ValidationError):
    pass


class IncompatibleAlphabetError(ValidationError):
    pass


class DepthError(ValidationError):
    """A truncation is too shallow for the query made against it."""


class RootDegreeError(ValidationError):
    """Cumulants need at least two single-letter vertices."""


class OrderError(ValidationError):
    """Not enough moments supplied for the requested order."""


class NotALawError(ValidationError):
    """Moment sequence fails positivity."""


class PreconditionError(ValidationError):
    pass


class UnboundSymbolError(ValidationError):
    pass


class TruncationError(ValidationError):
    """A request would silently depend on the part of the space cut away."""


class DomainError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PrecisionError(NumericalError):
    pass
