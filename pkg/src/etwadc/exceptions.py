"""Exception hierarchy shared by all subpackages."""


class EtwadcError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(EtwadcError, ValueError):
    pass


class SingularLyapunov(EtwadcError, ValueError):
    pass


class NonSymmetricQ(EtwadcError, ValueError):
    pass


class NegativeDelay(EtwadcError, ValueError):
    pass


class ImproperTransferFunction(EtwadcError, ValueError):
    pass


class AlgebraicLoop(EtwadcError, ValueError):
    pass


class TargetTooSmall(EtwadcError, ValueError):
    pass


class NonFiniteState(EtwadcError, ArithmeticError):
    pass


class FrequencyOnEigenvalue(EtwadcError, ValueError):
    pass


class ParseError(EtwadcError, ValueError):
    """Malformed input file; the message carries file and line."""


class ValidationError(EtwadcError, ValueError):
    pass


class NonConvergence(EtwadcError, RuntimeError):
    pass


class SingularJacobian(EtwadcError, RuntimeError):
    pass


class SingularEliminationBlock(EtwadcError, ValueError):
    pass


class EquilibriumResidual(EtwadcError, RuntimeError):
    pass


class DefectiveMode(EtwadcError, ValueError):
    pass


class UnstableClosedLoop(EtwadcError, ValueError):
    pass


class SigmaOutOfRange(EtwadcError, ValueError):
    pass


class WrongMode(EtwadcError, ValueError):
    pass


class ComplexDiscriminant(EtwadcError, ValueError):
    pass


class UndefinedBound(EtwadcError, ValueError):
    pass


class StageError(EtwadcError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
