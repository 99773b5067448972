"""Exception hierarchy.

Two families matter to callers: ``ValidationError`` (bad input, CLI exit
code 2) and ``NumericalError`` (a computation could not reach a trustworthy
answer, CLI exit code 3).
"""


class BilapError(Exception):
    """Base class for all package errors."""


class ValidationError(BilapError, ValueError):
    pass


class NumericalError(BilapError, ArithmeticError):
    pass


# graph construction
class LoopEdge(ValidationError):
    pass


class DuplicateEdge(ValidationError):
    pass


class Disconnected(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class SizeTooSmall(ValidationError):
    pass


class SizeCapExceeded(ValidationError):
    pass


# discrete operators
class NegativeTime(ValidationError):
    pass


class NonpositiveTime(ValidationError):
    pass


class InvalidExponent(ValidationError):
    pass


class EmptyGrid(ValidationError):
    pass


class NotApplicable(ValidationError):
    pass


# vertex conditions
class UnsupportedGraphForPreset(ValidationError):
    pass


class DegenerateAngle(ValidationError):
    pass


class NotSelfAdjoint(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


# finite elements
class NonpositiveLength(ValidationError):
    pass


class ConditionGraphMismatch(ValidationError):
    pass


class SolverFailure(NumericalError):
    pass


class AmbiguousGap(NumericalError):
    pass


# qualitative analysis
class InsufficientModes(ValidationError):
    pass


class AmbiguousSign(NumericalError):
    pass


class InsufficientDecay(NumericalError):
    pass


class NeverPositiveWithinHorizon(NumericalError):
    pass


class BoundaryConditionViolated(ValidationError):
    pass


# io
class SchemaError(ValidationError):
    pass


class MixedLengths(SchemaError):
    pass
