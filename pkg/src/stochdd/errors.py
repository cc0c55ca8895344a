"""Exception hierarchy shared by every stochdd module."""


class StochDDError(Exception):
    """Base class for all errors raised by stochdd."""


class InvalidArgumentError(StochDDError, ValueError):
    pass


class UnsupportedGateError(StochDDError, ValueError):
    pass


class NumericDegeneracyError(StochDDError, ArithmeticError):
    pass


class ResourceLimitError(StochDDError, RuntimeError):
    pass


class CircuitValidationError(StochDDError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class RunError(StochDDError, RuntimeError):
    """A single stochastic run failed; ``run_index`` identifies it."""

    def __init__(self, run_index, cause):
        self.run_index = run_index
        self.cause = cause
        super().__init__(f"run {run_index} failed: {cause!r}")
