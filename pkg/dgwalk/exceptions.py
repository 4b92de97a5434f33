# dgwalk/exceptions.py
class DGWalkError(Exception):
    """Base class for errors raised by dgwalk."""


class DimensionError(DGWalkError, ValueError):
    """Shapes of tables, vectors or moves do not fit together."""


class InvalidStateError(DGWalkError, ValueError):
    """A state violates the row/column sum constraints where a valid one is required."""


class ParameterError(DGWalkError, ValueError):
    """A numeric parameter lies outside the domain of the operation."""


class PreconditionError(DGWalkError, ValueError):
    """Inputs break a documented precondition (e.g. rows too close together)."""


class GroupTooLargeError(DGWalkError):
    """The group is too large for exact enumeration under the configured cap."""

    def __init__(self, required: int, cap: int, what: str = "exact enumeration"):
        self.required = required
        self.cap = cap
        super().__init__(
            f"instance too large for {what}: |G| = {required} exceeds cap {cap}; "
            f"raise max_group_size to at least {required}"
        )
