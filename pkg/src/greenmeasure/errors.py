"""Exception and warning types.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its exit-code contract without a lookup table:
2 parse, 3 validation, 4 mathematical precondition, 5 non-convergence.
"""


class GreenMeasureError(Exception):
    exit_code = 1


class SpecError(GreenMeasureError, ValueError):
    """Malformed kernel spec, config key or flag value."""

    exit_code = 2


class ValidationError(GreenMeasureError):
    """An object failed a numerical admissibility check."""

    exit_code = 3


class PreconditionError(GreenMeasureError):
    exit_code = 4


class UnsupportedAnalytic(PreconditionError):
    pass


class InfiniteMoment(PreconditionError):
    pass


class DimensionTooSmall(PreconditionError):
    pass


class RecurrentRegime(PreconditionError):
    pass


class HeavyTailUnsupported(PreconditionError):
    pass


class SingularAtCoincidence(PreconditionError):
    pass


class DivergesAtOne(PreconditionError):
    pass


class InsufficientData(PreconditionError):
    pass


class ZeroModeUncertain(PreconditionError):
    """A lambda=0 grid estimate is only known up to an additive constant."""


class NotConverged(GreenMeasureError):
    exit_code = 5


class WrapAroundRisk(UserWarning):
    """Field mass reaches the box boundary; periodic convolution aliases it."""
