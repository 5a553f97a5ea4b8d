"""Exception types shared across the package."""


class AggPushError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(AggPushError):
    """Malformed configuration document or inconsistent catalog entry."""


class UnknownTable(AggPushError):
    pass


class UnknownColumn(AggPushError):
    pass


class InfeasibleNDV(AggPushError):
    """Target distinct count exceeds the requested row count."""


class MalformedPlan(AggPushError):
    """Physical plan violates a structural invariant."""


class UnpushableGrouping(AggPushError):
    """A dimension-side grouping column cannot be carried to the fact side."""


class TypeMismatch(AggPushError):
    """Aggregate input has a type the accumulator cannot consume."""


class NotCoLocated(AggPushError):
    """Merge input was not co-located by key (internal assertion)."""


class ZeroInput(AggPushError):
    """Reduction ratio requested over zero input rows."""


class OracleMismatch(AggPushError):
    """An executed strategy disagreed with the reference evaluation."""
