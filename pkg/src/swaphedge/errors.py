"""Exception types raised across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation (e.g. t > T)."""


class ContractError(ValueError):
    """A call violated an operation's preconditions (shape, measure, design)."""


class DegenerateDataError(ValueError):
    """Training data cannot be normalized (zero sample deviation)."""


class TrainingError(RuntimeError):
    """Network training diverged.

    Attributes
    ----------
    epoch : int
        Epoch at which a non-finite loss was first seen.
    date_index : int or None
        Monitor date index, filled in by the backward induction.
    """

    def __init__(self, message, epoch, date_index=None):
        super().__init__(message)
        self.epoch = epoch
        self.date_index = date_index


class NumericError(ArithmeticError):
    """Root finding or a linear solve failed to produce a usable answer."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``line`` points into the config file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
