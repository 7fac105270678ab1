"""Exception types shared across the package."""


class ApspError(Exception):
    """Base class for all package errors."""


class UserInputError(ApspError):
    """Bad input data, file, or configuration (CLI exit code 2)."""


class SchemaError(UserInputError):
    """Covariate schemas of two datasets do not line up."""


class ChainDivergenceError(ApspError):
    """A sampler produced a non-finite state (CLI exit code 3)."""

    def __init__(self, message, iteration=None, state=None):
        super().__init__(message)
        self.iteration = iteration
        self.state = state
