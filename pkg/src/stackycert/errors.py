"""Exception hierarchy shared by all modules."""


class StackyError(Exception):
    """Base class for every error raised by this package."""


class ParseError(StackyError):
    pass


class NotMonic(StackyError):
    pass


class Reducible(StackyError):
    pass


class IrreducibilityUndetermined(StackyError):
    """The degree-pattern test was inconclusive and no exhaustive fallback applies."""


class NotPrime(StackyError):
    pass


class OrderNotMaximalAtPrime(StackyError):
    """Dedekind's criterion fails: Z[theta] is not maximal at this prime."""


class DivisionByZero(StackyError, ZeroDivisionError):
    pass


class ZeroElement(StackyError):
    pass


class UnitElement(StackyError):
    pass


class NegativeValuation(StackyError):
    pass


class ZeroArgument(StackyError):
    pass


class InvalidModel(StackyError):
    pass


class PreconditionViolated(StackyError):
    pass


class GlobalCheckInconclusive(StackyError):
    pass


class NotPID(StackyError):
    pass


class UnsupportedDegree(StackyError):
    pass


class SearchExhausted(StackyError):
    pass


class MalformedInput(StackyError):
    pass


class InternalInconsistency(StackyError):
    """A proven theorem appears violated; indicates a bug, never bad input."""
