"""Exception and warning types raised across the package."""

import numpy as np


class DimensionError(ValueError):
    """Array shapes are inconsistent with each other or with a fit."""


class RankError(ValueError):
    """A matrix expected to have full column rank does not."""


class SingularGramError(np.linalg.LinAlgError):
    """The regressor Gram matrix is singular or numerically close to it."""


class InsufficientSamplesError(ValueError):
    """Too few observations for an unpenalized fit."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    The last iterate is kept on ``last_iterate`` so callers can inspect or
    reuse it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class LagError(ValueError):
    """Requested lag order is outside the admissible range."""


class NoSignalError(ValueError):
    """Every eigenvalue is numerically zero."""


class IllConditionedProjectionError(np.linalg.LinAlgError):
    """The projection used to recover factors is (nearly) singular."""

    def __init__(self, message, singular_value=None):
        super().__init__(message)
        self.singular_value = singular_value


class ConfigError(ValueError):
    """Invalid configuration value."""


class DegenerateInputError(ValueError):
    """Input panel has no variance to work with."""


class NumericalOverflowError(FloatingPointError):
    """A forecast recursion produced non-finite values."""


class ParseError(ValueError):
    """Malformed input file."""


class DegenerateGapWarning(RuntimeWarning):
    pass


class DegenerateColumnWarning(RuntimeWarning):
    pass


class CapReachedWarning(RuntimeWarning):
    pass


class NonStationaryWarning(RuntimeWarning):
    pass


def with_stage(err, stage):
    """Prefix ``err``'s message with a pipeline stage label and return it."""
    if getattr(err, "stage", None) is None:
        err.stage = stage
        if err.args:
            err.args = (f"[{stage}] {err.args[0]}",) + tuple(err.args[1:])
        else:
            err.args = (f"[{stage}]",)
    return err
