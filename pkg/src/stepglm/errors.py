"""Exception hierarchy.

Three top-level classes mirror the CLI exit-code taxonomy:
config (1), database (2), statistical (3).
"""


class StepGlmError(Exception):
    """Base class for all stepglm errors."""

    exit_code = 1


class ConfigError(StepGlmError):
    """Invalid model/sample/CLI configuration."""

    exit_code = 1


class DatabaseError(StepGlmError):
    """Database-level failure: missing table/column, execution error."""

    exit_code = 2


class StatisticalError(StepGlmError):
    """A fit failed for statistical reasons."""

    exit_code = 3


class ResponseDomainError(StatisticalError):
    """Response values outside the family's valid range."""


class DomainError(StatisticalError):
    """Mean left the family's valid range (misconfigured family/link pair)."""


class RankDeficiencyError(StatisticalError):
    """Information matrix is not positive definite."""

    def __init__(self, pivot_index, message=None):
        self.pivot_index = pivot_index
        super().__init__(
            message or f"matrix is rank deficient (failing pivot at index {pivot_index})"
        )


class SeparationError(StatisticalError):
    """Complete-separation heuristic triggered for a binomial fit."""


class NonConvergenceError(StatisticalError):
    """Fisher scoring did not converge within the iteration budget."""


class SampleTooSmallError(StatisticalError):
    """Realised subsample is too small for a stable in-memory fit."""


class ExpressibilityError(ConfigError):
    """Family/link pair cannot be expressed with SQL arithmetic + EXP."""
