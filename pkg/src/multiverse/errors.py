"""Exception hierarchy.

The CLI maps these onto exit codes, so every error raised by the library
belongs to one of three families: bad input/configuration, data or IO
problems, and numerical failures.
"""


class MultiverseError(Exception):
    """Base class for all errors raised by this package."""


# -- usage / configuration ---------------------------------------------------

class ConfigError(MultiverseError, ValueError):
    """Invalid configuration or call arguments."""


class DimensionError(ConfigError):
    """Array shapes do not agree."""


class SymmetryError(ConfigError):
    """A matrix required to be symmetric is not."""


class DomainError(ConfigError):
    """Argument outside the domain of the operation (zero vector, empty set)."""


class DegenerateColumnError(DomainError):
    """A classifier column has zero norm."""


class PremiseError(DomainError):
    """The premise of a theorem check is violated; this is not a bound failure."""


# -- data / IO ---------------------------------------------------------------

class DataError(MultiverseError):
    """Problems with datasets or files."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    pass


class SplitError(DataError):
    pass


class ExhaustionError(DataError):
    """More pairs requested than exist."""


# -- numerical ---------------------------------------------------------------

class NumericalError(MultiverseError, ArithmeticError):
    pass


class IndefiniteError(NumericalError):
    """Cholesky hit a non-positive pivot.  ``pivot`` is 1-based."""

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class ConvergenceError(NumericalError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, epoch, value):
        self.epoch = epoch
        self.value = value
        super().__init__(f"objective became non-finite ({value}) at epoch {epoch}")


class DegenerateDirectionError(NumericalError):
    """The constructive solution would divide by (near) zero."""


class ConstructionError(NumericalError):
    def __init__(self, class_index, message):
        self.class_index = class_index
        super().__init__(f"class {class_index}: {message}")
