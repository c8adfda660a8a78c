"""Exception types raised by the library."""


class ConfigurationError(ValueError):
    """Invalid network or experiment configuration."""


class NumericalError(ArithmeticError):
    """A factorization or inversion failed (e.g. a covariance is not PD)."""


class SingularMatrixError(NumericalError):
    """A matrix that must be invertible is (numerically) singular."""


class InfeasibleRootError(NumericalError):
    """The water-level equation has no root (every quasi-SINR is zero)."""


class TrialError(RuntimeError):
    """A Monte-Carlo trial failed; ``trial`` is its index, the cause is chained."""

    def __init__(self, trial, message):
        super().__init__(f"trial {trial}: {message}")
        self.trial = trial
