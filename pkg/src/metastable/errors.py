"""Exception hierarchy shared by every stage of the pipeline."""


class MetastableError(Exception):
    """Base class; ``stage`` names the module that raised."""

    stage = "metastable"


class ExpressionError(MetastableError, ValueError):
    """Malformed potential source text.

    ``position`` is the 0-based character offset of the offending token,
    or ``None`` when the problem is not tied to a location.
    """

    stage = "potential"

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class DomainError(MetastableError, ValueError):
    """Evaluation outside the domain box or a non-finite intermediate."""

    stage = "potential"


class MorseError(MetastableError):
    """A converged critical point has a (numerically) degenerate Hessian."""

    stage = "potential"


class HypothesisError(MetastableError):
    """The standing assumptions on the potential fail (e.g. fewer than two minima)."""

    stage = "potential"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ResolutionError(MetastableError):
    """A grid is too coarse, or a floating point range is exceeded."""

    stage = "landscape_topology"


class LabelingError(MetastableError):
    """Internal inconsistency while labeling minima (tolerance misconfiguration)."""

    stage = "landscape_topology"


class SolverError(MetastableError):
    """Factorization failure or eigensolver non-convergence."""

    stage = "operator_lab"


class CountMismatchError(MetastableError):
    """Number of eigenvalues in the spectral window differs from the prediction."""

    stage = "cli_report"


class ConfigError(MetastableError, ValueError):
    stage = "cli_report"
