"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a special function or branch."""


class ThresholdError(ValueError):
    """Spectral parameter too close to the threshold set tau(k)."""


class BorderlineEigenvalueError(ArithmeticError):
    """An eigenvalue sits within tolerance of zero, so a sign count is ambiguous."""


class ConvergenceError(RuntimeError):
    """An iteration hit its cap or a series failed to reach tolerance."""


class InvariantViolation(RuntimeError):
    """A mathematically guaranteed property failed numerically.

    Raised, for instance, when a fiber operator reports no discrete
    eigenvalue below its threshold, or when a bracket that must exist
    cannot be found.
    """
