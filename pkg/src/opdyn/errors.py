"""Exception hierarchy.

Every error raised by the package derives from :class:`OpdynError`.
Errors that signal a violated precondition (the caller asked for an
analysis whose hypotheses do not hold) derive from
:class:`PreconditionError`; the command line maps those to exit status 2.
"""


class OpdynError(Exception):
    pass


class PreconditionError(OpdynError):
    pass


class FieldMismatch(PreconditionError, ValueError):
    pass


class IndexDomainViolation(PreconditionError, ValueError):
    pass


class DimensionMismatch(PreconditionError, ValueError):
    pass


class AlreadyComplex(PreconditionError, ValueError):
    pass


class NotPowerBounded(PreconditionError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NotFiniteDimensional(PreconditionError):
    pass


class NotContraction(PreconditionError):
    pass


class PreconditionNotReturning(PreconditionError):
    pass


class HypothesisNotSatisfied(PreconditionError):
    pass


class ScalarNotUnimodular(PreconditionError):
    pass


class EmptySampleSet(PreconditionError, ValueError):
    pass


class SampleOutsideBall(PreconditionError, ValueError):
    pass


class NotUnimodular(PreconditionError, ValueError):
    pass


class NoApproximateKernel(OpdynError):
    def __init__(self, message, min_residual=None):
        super().__init__(message)
        self.min_residual = min_residual


class NotIsometry(PreconditionError):
    pass


class NegativeTime(PreconditionError, ValueError):
    pass


class UnboundedSemigroup(PreconditionError):
    pass


class LNotInvariant(PreconditionError):
    pass


class ZeroDirection(PreconditionError, ValueError):
    pass


class ZeroCandidate(PreconditionError, ValueError):
    pass


class EmptyNet(PreconditionError, ValueError):
    pass


class ParseError(OpdynError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InvariantViolation(OpdynError):
    def __init__(self, which, detail=""):
        msg = which if not detail else f"{which}: {detail}"
        super().__init__(msg)
        self.which = which
