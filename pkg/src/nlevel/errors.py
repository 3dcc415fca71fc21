"""Exception hierarchy shared by all modules.

Two families are distinguished because the command line maps them to
different exit codes: :class:`ValidationError` for inputs or checks that
are rejected, :class:`NonConvergence` for numerical procedures that fail to
reach their requested accuracy.
"""

__all__ = [
    "NlevelError",
    "ValidationError",
    "NonConvergence",
    "PoleAt",
    "CoincidentShifts",
    "ZeroArgument",
    "TooLarge",
    "DimensionTooSmall",
    "NumericalBreakdown",
    "QuadratureNonConvergence",
    "SupportViolation",
    "UnknownReductionType",
    "TruncationTooCoarse",
    "EmptySelection",
    "MalformedDatabase",
    "MalformedLine",
    "NonAscendingOrdinate",
    "DuplicateDiscriminant",
    "CancellationWarning",
]


class NlevelError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NlevelError):
    """Input rejected or an internal consistency check failed."""


class NonConvergence(NlevelError):
    """A numerical procedure did not reach the requested tolerance."""


class PoleAt(ValidationError):
    """Evaluation requested at (or within tolerance of) a pole."""

    def __init__(self, where, what="pole"):
        self.where = where
        super().__init__(f"{what} at {where!r}")


class CoincidentShifts(ValidationError):
    pass


class ZeroArgument(PoleAt):
    pass


class TooLarge(ValidationError):
    pass


class DimensionTooSmall(ValidationError):
    pass


class NumericalBreakdown(NonConvergence):
    pass


class QuadratureNonConvergence(NonConvergence):
    pass


class SupportViolation(ValidationError):
    pass


class UnknownReductionType(ValidationError):
    pass


class TruncationTooCoarse(NonConvergence):
    pass


class EmptySelection(ValidationError):
    pass


class MalformedDatabase(ValidationError):
    pass


class MalformedLine(MalformedDatabase):
    def __init__(self, lineno, text=""):
        self.lineno = lineno
        super().__init__(f"line {lineno}: cannot parse {text!r}")


class NonAscendingOrdinate(MalformedDatabase):
    def __init__(self, lineno):
        self.lineno = lineno
        super().__init__(f"line {lineno}: ordinate not strictly above the previous one")


class DuplicateDiscriminant(MalformedDatabase):
    def __init__(self, d):
        self.d = d
        super().__init__(f"discriminant d={d} appears in two blocks")


class CancellationWarning(UserWarning):
    """Summed terms are much larger than their total."""
