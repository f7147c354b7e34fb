"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes for the requested operation."""


class RankDeficientError(RuntimeError):
    """LU elimination hit a column whose pivot candidates are all exactly zero.

    ``step`` is the 0-based elimination step at which the factorization
    stopped; the first ``step`` columns were factored successfully.
    """

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"rank deficiency at elimination step {step}")


class SingularError(RuntimeError):
    """A triangular solve met an exactly zero diagonal entry at ``index``."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"zero diagonal entry at index {index}")


class NumericalError(RuntimeError):
    """An iterative kernel exhausted its iteration budget without converging."""


class ParseError(ValueError):
    """A reader rejected malformed input; ``offset`` is the byte position."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
