"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(ArithmeticError):
    """An iterative computation did not converge.

    ``estimate`` holds the last value reached before giving up.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NumericalFailure(ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateTruncationError(DomainError):
    pass


class InfeasibleMomentsError(DomainError):
    pass


class UndefinedTestError(ArithmeticError):
    """Association test statistic is undefined (e.g. monomorphic SNP)."""


class SeparationError(ArithmeticError):
    """Logistic fit diverged because of complete or quasi-separation."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{loc}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class EmptyPanelError(DataError):
    pass


class ReplicateError(RuntimeError):
    """A benchmark replicate failed; the original error is the ``__cause__``."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed
