"""Exception hierarchy shared by all fairdiv modules."""


class FairDivError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(FairDivError):
    """Vector or matrix lengths do not agree (wrong t, wrong n, ...)."""


class ItemUnderflowError(FairDivError):
    """Attempt to remove an item of a type with zero multiplicity."""


class SchemaError(FairDivError):
    """A JSON document does not match the documented schema."""


class PreconditionError(FairDivError):
    """An operation was called outside its documented preconditions."""


class UnsupportedInstanceError(FairDivError):
    """No implemented allocator covers this instance class."""


class InvariantViolationError(FairDivError):
    """A should-be-impossible internal state was reached; indicates a bug."""


class EnumerationCapError(FairDivError):
    """A search or enumeration would exceed its configured size cap."""
