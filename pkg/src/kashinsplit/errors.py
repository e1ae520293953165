"""Exception types shared across modules and mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration or argument combination (exit code 1)."""


class InfeasibleError(RuntimeError):
    """A requested computation has an empty or unreachable feasible set (exit code 2)."""


class RetryExhaustedError(RuntimeError):
    """A retry loop ran out of attempts (exit code 3); carries the best attempt."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
