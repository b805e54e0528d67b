"""Exception hierarchy shared by every module."""


class NihccError(Exception):
    """Base class for toolkit errors."""


class ShapeError(NihccError, ValueError):
    """Axis count or axis length mismatch."""


class PartitionError(NihccError, ValueError):
    """A grouping or bipartition is not a valid partition of the axes."""


class FieldError(NihccError, ValueError):
    """Operands live over different fields, or a value is not a field element."""


class PreconditionError(NihccError, ValueError):
    """An operation was called outside its documented domain."""


class CapExceeded(NihccError):
    """A resource cap would be exceeded; the search is refused before it starts."""

    def __init__(self, what: str, estimate: int, cap: int):
        self.what = what
        self.estimate = estimate
        self.cap = cap
        super().__init__(f"{what}: estimated search space {estimate} exceeds cap {cap}")


class InvariantViolation(NihccError, AssertionError):
    """An internal consistency check failed. Always a bug."""
