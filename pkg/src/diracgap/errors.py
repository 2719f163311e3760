"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` (bad input, CLI exit
code 2) and :class:`SolverError` (a numerical method failed, exit code 3).
"""


class DiracGapError(Exception):
    """Base class for all package errors."""


class ValidationError(DiracGapError, ValueError):
    pass


class SolverError(DiracGapError, RuntimeError):
    pass


# -- measures ---------------------------------------------------------------

class AtomTooHeavy(ValidationError):
    def __init__(self, center, weight):
        self.center = tuple(float(c) for c in center)
        self.weight = float(weight)
        super().__init__(
            f"AtomTooHeavy: atom at {self.center} has weight {self.weight:g}, need |w| < 1"
        )


class NegativeComponent(ValidationError):
    pass


class TrivialMeasure(ValidationError):
    pass


class NotRadial(ValidationError):
    pass


class SingularPoint(ValidationError):
    pass


class InvalidComponent(ValidationError):
    pass


# -- discretisation ---------------------------------------------------------

class InvalidBasisSpec(ValidationError):
    pass


class LambdaOutOfGap(ValidationError):
    pass


class NotPositiveDefinite(SolverError):
    pass


class DegenerateBasis(ValidationError):
    pass


class QuadratureNodeOnCenter(SolverError):
    pass


# -- root finding -----------------------------------------------------------

class NoRootInGap(SolverError):
    pass


class NonMonotoneDetected(SolverError):
    pass


# -- shooting ---------------------------------------------------------------

class SingularStart(ValidationError):
    pass


class Supercritical(ValidationError):
    pass


class BlowUp(SolverError):
    pass


class NoSignChange(SolverError):
    pass


# -- iterative / quadrature -------------------------------------------------

class Stagnation(SolverError):
    pass


class QuadratureFailure(SolverError):
    pass


class SeriesTruncationError(SolverError):
    pass


class PartitionNotUnity(ValidationError):
    pass


class ConfigError(ValidationError):
    pass
