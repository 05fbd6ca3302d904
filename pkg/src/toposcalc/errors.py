"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ToposError(Exception):
    """Base class for all errors raised by toposcalc."""


class ValidationError(ToposError):
    """Raw data does not describe a valid structure."""


class MissingComposite(ValidationError):
    pass


class EndpointMismatch(ValidationError):
    pass


class AssociativityViolation(ValidationError):
    pass


class IdentityViolation(ValidationError):
    pass


class FunctorialityViolation(ValidationError):
    pass


class NaturalityViolation(ValidationError):
    pass


class UnknownObject(ToposError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class UnknownArrow(ToposError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class ShapeMismatch(ToposError):
    pass


class SizeCapExceeded(ToposError):
    pass


class NotAMono(ToposError):
    pass


class NotLocal(ToposError):
    pass


class MissingMaximal(ValidationError):
    pass


class StabilityViolation(ValidationError):
    def __init__(self, message: str, sieve=None, arrow=None):
        super().__init__(message)
        self.sieve = sieve
        self.arrow = arrow


class TransitivityViolation(ValidationError):
    def __init__(self, message: str, sieve=None, other=None):
        super().__init__(message)
        self.sieve = sieve
        self.other = other


class NotAClosureOperator(ValidationError):
    pass


class ForcingVerificationFailed(ToposError):
    """A generator did not acquire the forced property after sheafification."""


class IsoForcingIncomplete(ForcingVerificationFailed):
    """A generator was not inverted by the compiled localization."""


class EnumerationUnavailable(ToposError):
    pass


class ResidualNotTrivial(ToposError):
    pass


class NotNested(ToposError):
    pass


class StabilizationFailure(ToposError):
    """The diagonal tower did not stabilize where it must for presheaves of sets."""


class DSLSyntaxError(ToposError):
    """Malformed site document; carries the 1-based position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class SemanticError(ToposError):
    """Well-formed document that refers to things that do not exist."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.col = col
