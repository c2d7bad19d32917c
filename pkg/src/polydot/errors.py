class PolydotError(Exception):
    """Base class for all errors raised by this package."""


class FieldError(PolydotError, ValueError):
    pass


class InverseOfZero(FieldError, ZeroDivisionError):
    pass


class PartitionError(PolydotError, ValueError):
    pass


class InsufficientShares(PolydotError):
    """Fewer results than the recovery threshold were supplied to a decoder."""

    def __init__(self, have, need):
        super().__init__(f"need at least {need} results to decode, got {have}")
        self.have = have
        self.need = need


class DuplicatePoint(PolydotError, ValueError):
    pass


class InterferenceError(PolydotError):
    """A readout coefficient receives contributions the decoder cannot cancel."""


class InconsistentQueries(PolydotError, ValueError):
    pass


class Unsupported(PolydotError, NotImplementedError):
    pass


class BudgetExceeded(PolydotError):
    pass
