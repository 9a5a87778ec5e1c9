"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class ConfigError(ValueError):
    """A solver or grid configuration violates its invariants."""


class DataFormatError(ValueError):
    """An input file could not be parsed into a numeric matrix."""


class NumericalError(ArithmeticError):
    """An iteration produced non-finite values.

    ``trace`` carries whatever per-iteration record was available when the
    failure was detected, so callers can inspect how the run diverged.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else {}
