"""Exception hierarchy.

Every error raised on a contract violation derives from MobicrowdError so
callers can catch the whole family with one except clause.
"""

from __future__ import annotations


class MobicrowdError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(MobicrowdError):
    """A configuration mapping is malformed or contains unknown keys."""


class InvalidSpecError(MobicrowdError):
    """A sweep or experiment specification is malformed."""


class EmptyWorldError(MobicrowdError):
    """A world was requested with no workers."""


class ClockRegressionError(MobicrowdError):
    """Simulation time was asked to move backwards."""


class OutOfOrderError(MobicrowdError):
    """An activity record arrived with a timestamp before the last one."""


class NoWorkersError(MobicrowdError):
    """A ranking or dispatch call received an empty worker pool."""


class NotEmergencyError(MobicrowdError):
    """A broadcast was requested for a task that is not an emergency."""


class NoEventsError(MobicrowdError):
    """Network metrics were requested over an empty event list."""


class NonPositiveTimeError(MobicrowdError):
    """A response time of zero or less was passed to a scoring function."""


class NoAnswersError(MobicrowdError):
    """An aggregation call received no answers."""


class MissingWeightError(MobicrowdError):
    """A weighted vote found an answer whose worker has no weight."""


class EmptyMatrixError(MobicrowdError):
    """Confusion-matrix aggregation received a question with no answers."""


class NoDataError(MobicrowdError):
    """Feature extraction received zero observations."""


class TooFewPointsError(MobicrowdError):
    """Clustering was asked for more clusters than there are points."""


class EmptyInputError(MobicrowdError):
    """An accuracy computation received an empty estimate set."""


class KeyMismatchError(MobicrowdError):
    """Estimated labels and ground truth cover different question ids."""
