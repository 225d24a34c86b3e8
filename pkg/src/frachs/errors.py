"""Exception hierarchy shared by every frachs module."""


class FracHSError(Exception):
    """Base class for all errors raised by the lab."""


class ParameterDomainError(FracHSError, ValueError):
    """A parameter lies outside the domain where the quantity is defined."""


class GridError(FracHSError, ValueError):
    pass


class GridMismatchError(FracHSError, ValueError):
    """Operands live on different grids."""


class ConfigError(FracHSError):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class NumericalFailure(FracHSError):
    """A numerical procedure could not deliver a trustworthy result."""


class EigenSolverError(NumericalFailure):
    def __init__(self, message, iterations=None, converged=None):
        details = []
        if iterations is not None:
            details.append(f"iterations={iterations}")
        if converged is not None:
            details.append(f"converged_pairs={converged}")
        if details:
            message = f"{message} [{', '.join(details)}]"
        super().__init__(message)
        self.iterations = iterations
        self.converged = converged


class IterationDivergedError(NumericalFailure):
    """The quotient history stopped decreasing."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class IterationLimitError(NumericalFailure):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class CalibrationError(NumericalFailure):
    pass


class QuadratureError(NumericalFailure):
    pass


class ResolutionError(NumericalFailure):
    pass


class TruncationError(NumericalFailure):
    pass


class SingularPointError(NumericalFailure, ValueError):
    """Evaluation requested at a singular point of a kernel or transform."""
