"""Exception hierarchy shared by all modules."""


class ThermomapError(Exception):
    """Base class for all library errors."""


class DomainError(ThermomapError):
    """A point or interval lies outside the domain it must belong to."""


class SchemaError(ThermomapError):
    """A map-spec document violates the schema; message carries the field path."""


class CriticalOrbitError(ThermomapError):
    """An orbit hit a critical point where the derivative vanishes."""

    def __init__(self, message: str, hit_time: int):
        super().__init__(message)
        self.hit_time = hit_time


class AmbiguityError(ThermomapError):
    """A point sits on a branch boundary and no side flag was supplied."""

    def __init__(self, message: str, hit_time: int = 0):
        super().__init__(message)
        self.hit_time = hit_time


class ResourceError(ThermomapError):
    """A caller-supplied cap (cylinder count, node count, ...) was exceeded."""

    def __init__(self, message: str, count: int = 0):
        super().__init__(message)
        self.count = count


class NumericError(ThermomapError):
    """An iteration that should converge failed to."""


class DegenerateBranchError(ThermomapError):
    """A scheme branch has a vanishing derivative bracket."""


class InfinitePressureError(ThermomapError):
    """A weight sum diverges; the pressure is +infinity on the probed range."""


class NonCompatibleError(ThermomapError):
    """The inducing time is not integrable for the measure at hand."""


class NotApplicableError(ThermomapError):
    """An operation was asked of a map outside its stated class."""
