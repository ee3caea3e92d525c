"""Exception hierarchy shared across the package."""


class MopinnError(Exception):
    """Base class for all library errors."""


class ConfigurationError(MopinnError):
    """Invalid user-supplied configuration (grid sizes, weights, hyperparameters)."""


class ContractViolationError(MopinnError):
    """Caller broke an operation precondition (dimension mismatch, bad vector length)."""


class UsageError(MopinnError):
    """API misuse, e.g. asking for gradients of a value that was never recorded."""


class RunFailedError(MopinnError):
    """A training run produced non-finite losses or gradients and was aborted."""
