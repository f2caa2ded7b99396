"""Exception types shared across the package."""


class UsageError(ValueError):
    """A call violated an operation's contract: wrong leakage mode, bad
    dimensions, out-of-range parameters."""


class CapacityError(RuntimeError):
    """An operation was asked to materialize more state than its guard
    allows.  Raised instead of silently degrading."""


class InternalError(RuntimeError):
    """An invariant that should be unbreakable was broken, e.g. a certified
    cover ran out of centers or a recovered template failed verification."""
