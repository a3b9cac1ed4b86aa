"""Exception hierarchy shared by all robustdrift modules."""


class RobustDriftError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RobustDriftError):
    """One or more model assumptions are violated.

    ``violations`` lists every failed check so a caller sees the full
    diagnostic, not only the first problem.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class RankDeficient(ValidationError):
    """Volatility matrix does not have full row rank."""


class BadRiskAversion(ValidationError):
    """Risk aversion parameter is >= 1."""


class BadDimension(ValidationError):
    """Asset or Brownian dimension outside the supported range."""


class NonPositive(ValidationError):
    """A parameter that must be strictly positive is not."""


class FactorizationFailed(RobustDriftError):
    """A symmetric positive-definite factorization broke down."""


class EigenFailure(RobustDriftError):
    """Symmetric eigensolver failed or produced an unusable spectrum."""


class NoBracket(RobustDriftError):
    """Root bracket for the boundary scalar equation has no sign change."""


class ZeroStrategy(RobustDriftError):
    """Operation undefined for the zero allocation."""


class SaddleViolation(RobustDriftError):
    """A sampled pair violated the saddle-point inequalities."""

    def __init__(self, message, pi=None, mu=None, violation=None):
        super().__init__(message)
        self.pi = pi
        self.mu = mu
        self.violation = violation


class UnsupportedDimension(RobustDriftError):
    """Operation only implemented for a specific asset count."""


class StepTooLarge(RobustDriftError):
    """Explicit time step destroyed positive semidefiniteness."""


class SingularUpdate(RobustDriftError):
    """Innovation covariance in a Bayesian update is singular."""


class GridMismatch(RobustDriftError):
    """Paths or observation dates do not line up with the time grid."""


class NonPositiveWealth(RobustDriftError):
    """Utility requested for wealth <= 0."""


class DegenerateCovariance(RobustDriftError):
    """Conditional covariance too close to singular to define an ellipsoid."""


class ModeUnsupported(RobustDriftError):
    """Unknown evaluation mode."""


class OutOfDomain(RobustDriftError):
    """Argument outside the mathematical domain of the function."""


class ParseError(RobustDriftError):
    """Configuration file is syntactically invalid or has unknown keys."""
