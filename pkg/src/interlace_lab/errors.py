"""Exception hierarchy. Every numerical failure raised by the library derives
from :class:`LabError` so the CLI can embed it verbatim in a JSON report."""


class LabError(Exception):
    """Base class for all library errors."""


class QuadratureError(LabError):
    """An adaptive quadrature rule did not reach its tolerance."""


class SingularSystemError(LabError):
    """The Green's-function Gram matrix on K is numerically singular."""


class NegativeWeightError(LabError):
    """An equilibrium weight came out below -tolerance."""


class RejectionBudgetExceeded(LabError):
    """Conditioning by rejection failed to accept within the retry cap."""


class NotPositiveDefiniteError(LabError):
    """Covariance stayed indefinite after the maximal diagonal jitter."""


class DivergenceError(LabError):
    """A requested exponential moment is infinite."""


class TruncationOrderError(LabError):
    """A series coefficient beyond the configured truncation order was requested."""


class MismatchError(LabError):
    """Two routes to an exact identity disagree.

    ``detail`` carries the first differing coefficient (or offending index).
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class DegreeBoundError(LabError):
    """A polynomial observable exceeds the configured moment degree bounds."""
