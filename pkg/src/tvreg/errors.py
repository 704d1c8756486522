"""Exception and warning types shared across the package."""


class TvregError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveBandwidth(TvregError):
    """A bandwidth argument was zero or negative."""


class SingularDesign(TvregError):
    """The local weighted normal equations are numerically singular.

    Usually means the bandwidth is too small or the query point lies
    outside the support of the data.
    """

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class InsufficientSample(TvregError):
    """Too few observations for the requested number of parameters."""


class LagExceedsSample(TvregError):
    """The autoregressive truncation lag leaves fewer than 3 usable rows."""


class AllCandidatesFailed(TvregError):
    """Every bandwidth candidate produced an infeasible cross-validation fit."""


class AllFitsFailed(TvregError):
    """No tuning-parameter grid cell produced a valid penalized solution."""


class NotIdentifiedConstant(TvregError):
    """The requested lag was not identified as a nonzero constant coefficient."""


class LengthMismatch(TvregError):
    """Two vectors that must be the same length are not."""


class EmptyRecords(TvregError):
    """Aggregation was requested over an empty record collection."""


class InvalidConfig(TvregError):
    """A run configuration failed schema validation."""


class DataError(TvregError):
    """A dataset file could not be parsed or violates the CSV contract."""


class NonConvergenceWarning(UserWarning):
    """Coordinate descent hit the sweep limit; the last iterate is returned."""


class ExplosiveWarning(UserWarning):
    """A simulated error path left the stability region (|e_t| > 1e6)."""
