"""Exception hierarchy for special_cycles."""
from typing import Optional


class SpecialCyclesError(Exception):
    """Base class for every domain failure raised by the package."""


class ContextMismatchError(SpecialCyclesError):
    """Operands were built over different prime contexts."""


class PrecisionError(SpecialCyclesError):
    """A valuation that must be finite reached the working precision."""


class SingularMatrixError(SpecialCyclesError):
    """A hermitian matrix has no finite determinant valuation."""


class ProfileShapeError(SpecialCyclesError):
    """A Jordan profile does not have the shape an operation requires."""


class ParityError(SpecialCyclesError):
    """The exponents a and b have the wrong parity."""


class TruncationError(SpecialCyclesError):
    """A verdict of the display simulation could depend on truncated terms."""


class VerificationError(SpecialCyclesError):
    """Two independent computations of the same quantity disagree."""


class BudgetExceededError(SpecialCyclesError):
    """The estimated work of an enumeration exceeds the configured budget."""

    def __init__(self, what: str, estimate: int, budget: Optional[int], limit: str = "budget"):
        self.what = what
        self.estimate = estimate
        self.budget = budget
        self.limit = limit
        super().__init__(f"{what}: estimated {estimate} exceeds {limit} {budget}")
