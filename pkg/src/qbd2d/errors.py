"""Exception hierarchy shared by all modules.

The CLI maps each class to an exit code, so every numerical failure raised
inside the package should derive from one of these.
"""


class QBDError(Exception):
    """Base class for package errors."""

    exit_code = 1


class ModelFileError(QBDError, ValueError):
    """Model file could not be parsed or violates the file schema."""

    exit_code = 2


class ModelValidationError(QBDError, ValueError):
    """A model violates a structural constraint (zero pattern, proxies)."""

    exit_code = 1

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InfeasibleError(QBDError):
    """A region or optimization problem is empty for this model."""

    exit_code = 1


class DomainError(InfeasibleError):
    """An argument lies outside the convergence domain of a function.

    ``value`` carries the quantity that left its admissible range, e.g. the
    spectral radius of a geometric-series kernel.
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class ConvergenceError(QBDError):
    """An iterative method hit its iteration cap."""

    exit_code = 3
