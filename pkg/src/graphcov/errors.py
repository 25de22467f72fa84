"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: invalid input -> 2, numerical
failure (rank/singularity/convergence) -> 3, capability limit -> 4.
"""


class GraphCovError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(GraphCovError):
    """Malformed or inconsistent input (bad graph, dimension mismatch, ...)."""


class NumericalError(GraphCovError):
    """Base class for failures of the numerical machinery."""


class RankDeficiencyError(NumericalError):
    """A model matrix lacks full column rank.

    Carries the numerical rank so callers can report how far the model
    is from identifiable.
    """

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class SingularityError(NumericalError):
    """A matrix that must be invertible is (numerically) singular."""


class ConvergenceError(NumericalError):
    """An iterative solver exhausted its iteration budget."""


class CapabilityError(GraphCovError):
    """The request exceeds a configured capability limit."""


class RepeatedEigenvaluesWarning(UserWarning):
    """The shift operator has (numerically) repeated eigenvalues.

    Identifiability of individual spectral components within a repeated
    cluster is not guaranteed; rank checks on the compressed model still
    apply.
    """
