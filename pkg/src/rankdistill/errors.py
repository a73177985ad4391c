"""Exception hierarchy shared across the package."""


class RankDistillError(Exception):
    """Base class for all package errors."""


class DimensionError(RankDistillError, ValueError):
    """Empty input or incompatible array shapes."""


class DomainError(RankDistillError, ValueError):
    """Input values outside the mathematical domain (NaN/Inf, etc.)."""


class ArgumentError(RankDistillError, ValueError):
    """Invalid argument value (counts, ranges, tags)."""


class DegenerateInputError(RankDistillError, ValueError):
    """Structurally valid input on which the operation is undefined."""


class ConvergenceError(RankDistillError, RuntimeError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class TrainingError(RankDistillError, RuntimeError):
    """Training diverged or produced non-finite values."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class ConfigError(RankDistillError, ValueError):
    """Malformed or inconsistent experiment configuration."""
