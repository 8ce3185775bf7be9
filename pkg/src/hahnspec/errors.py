"""Exception hierarchy shared by every module of the package."""


class HahnSpecError(Exception):
    """Base class for all library errors."""


class PrecisionExhausted(HahnSpecError):
    """A decision needed more known coefficients than are available."""


class NotInvertible(HahnSpecError):
    pass


class NegativeValuation(HahnSpecError):
    pass


class OddValuation(HahnSpecError):
    pass


class ResidueNotASquare(HahnSpecError):
    pass


class NotAPerfectSquare(HahnSpecError):
    pass


class LinearlyDependent(HahnSpecError):
    pass


class NotContractive(HahnSpecError):
    pass


class NotInvariant(HahnSpecError):
    pass


class IrrationalEigenvalue(HahnSpecError):
    """The residue matrix of some block has an eigenvalue outside Q."""

    def __init__(self, message, path=()):
        super().__init__(message)
        self.path = tuple(path)


class NotOrthonormalizable(HahnSpecError):
    """Some eigenvector has a squared length that is not a rational square."""

    def __init__(self, message, path=()):
        super().__init__(message)
        self.path = tuple(path)


class ScalarLeading(HahnSpecError):
    """Raised by ``normalize_leading`` when the leading matrix is c*I."""


class InvariantViolation(HahnSpecError):
    """An internal symmetry invariant of the order-by-order step failed."""


class RadiusOutsideDT(HahnSpecError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(HahnSpecError, ValueError):
    pass
