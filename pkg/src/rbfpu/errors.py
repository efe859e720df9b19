"""Exception hierarchy shared by the rbfpu modules."""


class RBFPUError(Exception):
    """Base class for all library errors."""


class ValidationError(RBFPUError, ValueError):
    """Invalid user input (bad dataset, bad parameter, bad file)."""


class DuplicateNodeError(ValidationError):
    pass


class UnsupportedDimensionError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class DegenerateDomainError(ValidationError):
    pass


class OutOfDomainError(ValidationError):
    pass


class NotSPDError(RBFPUError, ArithmeticError):
    """A Cholesky pivot fell at or below the pivot tolerance."""

    def __init__(self, pivot_index, pivot):
        super().__init__(f"matrix is not numerically SPD: pivot {pivot_index} = {pivot:.3e}")
        self.pivot_index = pivot_index
        self.pivot = pivot


class DegenerateCoverError(RBFPUError):
    pass


class UnfittableSubdomainError(RBFPUError):
    pass


class InsufficientDataError(RBFPUError, ValueError):
    pass


class UncoveredPointError(RBFPUError):
    pass


class ModelFormatError(RBFPUError):
    """Model file is unreadable or carries an unsupported schema version."""
