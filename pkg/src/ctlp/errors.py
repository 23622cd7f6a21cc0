"""Exception hierarchy shared by every stage of the pipeline."""


class CLPError(Exception):
    """Base class for all errors raised by ctlp."""


class DomainError(CLPError, ValueError):
    """An argument lies outside the domain of a function."""


class StructuralError(CLPError, ValueError):
    """An interval or rectangle straddles a breakpoint."""


class DataError(CLPError, ValueError):
    """Coefficient data is malformed or produces non-finite values."""


class ConfigurationError(CLPError, ValueError):
    """Solver or mesh parameters cannot be satisfied."""


class CertificationError(CLPError):
    """A structural assumption (sign, sigma-dichotomy, feasibility) is not certified."""


class NumericalError(CLPError, ArithmeticError):
    """The simplex basis became numerically singular."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class StageError(CLPError):
    """Wraps a failure with the name of the pipeline stage that produced it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
