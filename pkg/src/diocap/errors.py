"""Exception types shared across the toolkit."""


class DiocapError(Exception):
    """Base class for all toolkit errors."""


class AmbiguousDigit(DiocapError):
    """An interval straddles a reciprocal-integer boundary; the digit cannot
    be certified at the current precision."""


class RationalInput(DiocapError):
    """The remainder of a continued-fraction expansion became exactly zero."""


class PrecisionExhausted(DiocapError):
    """The configured maximum working precision was reached without being
    able to certify the requested quantity."""


class InsufficientTable(DiocapError):
    """A series evaluation was asked for more entries than the table holds."""


class DomainError(DiocapError):
    """An evaluation was requested outside the declared domain."""


class Undecidable(DiocapError):
    """A certified comparison could not be separated at the given width."""

    def __init__(self, n: int, message: str = ""):
        self.n = n
        super().__init__(message or f"comparison undecidable at index {n}")


class NonConvergence(DiocapError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class IncompatibleClamp(DiocapError):
    """Node sets in a family do not share a usable clamp distance."""


class OverflowEvenInLogSpace(DiocapError):
    """Iterated logarithms of the requested quantity exceed float range and
    the caller demanded plain-float log entries."""
