"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`NclpError`,
so callers (and the CLI) can separate numerical/structural failures from bugs.
"""


class NclpError(Exception):
    """Base class for library errors."""


class NotPositive(NclpError):
    pass


class DimensionMismatch(NclpError):
    pass


class ExponentMismatch(NclpError):
    pass


class DegenerateBasis(NclpError):
    """A numerical rank decision fell inside the tolerance band."""

    def __init__(self, msg, gap=None):
        super().__init__(msg if gap is None else f"{msg} (gap {gap:.3e})")
        self.gap = gap


class NotSubalgebra(NclpError):
    pass


class NotInvariant(NclpError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class OutsideBicommutant(NclpError):
    pass


class SingularLambda(NclpError):
    pass


class ReconstructionMismatch(NclpError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class AmbiguousBlock(NclpError):
    pass


class NotFaithful(NclpError):
    pass


class NotAntiauto(NclpError):
    pass


class SingularSystem(NclpError):
    def __init__(self, msg, nullity=None):
        super().__init__(msg)
        self.nullity = nullity


class InvalidTriple(NclpError):
    pass


class NotIsometry(NclpError):
    def __init__(self, msg, deviation=None):
        super().__init__(msg)
        self.deviation = deviation


class DecompositionFailure(NclpError):
    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals or {}


class NotIncreasing(NclpError):
    pass


class WrongAlgebra(NclpError):
    pass


class NoWitnessFound(NclpError):
    def __init__(self, msg, gap=None):
        super().__init__(msg)
        self.gap = gap


class SchemaError(NclpError):
    """Malformed JSON input; ``path`` names the offending location."""

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path


__all__ = [
    "NclpError",
    "NotPositive",
    "DimensionMismatch",
    "ExponentMismatch",
    "DegenerateBasis",
    "NotSubalgebra",
    "NotInvariant",
    "OutsideBicommutant",
    "SingularLambda",
    "ReconstructionMismatch",
    "AmbiguousBlock",
    "NotFaithful",
    "NotAntiauto",
    "SingularSystem",
    "InvalidTriple",
    "NotIsometry",
    "DecompositionFailure",
    "NotIncreasing",
    "WrongAlgebra",
    "NoWitnessFound",
    "SchemaError",
]
