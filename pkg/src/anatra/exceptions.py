"""Exception types raised across the package."""


class AnatraError(Exception):
    """Base class for all package errors."""


class SingularGeometry(AnatraError):
    """The interpolation set is not poised in the minimum Frobenius norm sense.

    Raised when the KKT matrix cannot be factorized or is too badly conditioned.
    Callers are expected to rebuild the set with :func:`anatra.geometry.affine_points`.
    """


class DegeneratePrediction(AnatraError):
    """The model predicts (numerically) no decrease for the trial step."""


class MissingNoiseInfo(AnatraError):
    """Shot-based noise estimation was requested but the oracle reports no spread."""


class BudgetTooSmall(AnatraError):
    """The evaluation budget cannot cover the initial model."""


class OracleFailure(AnatraError):
    """The objective oracle raised or returned a non-finite value.

    The partially filled trace is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InvalidShots(AnatraError, ValueError):
    """Shot count too small to produce a standard error."""


class BenchError(AnatraError):
    """Invalid benchmark input or missing benchmark results."""
