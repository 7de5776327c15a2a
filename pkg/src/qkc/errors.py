"""Exception hierarchy. Everything raised on bad domain input derives from QKCError."""


class QKCError(Exception):
    pass


class StateError(QKCError, ValueError):
    pass


class CircuitError(QKCError, ValueError):
    pass


class BudgetError(QKCError):
    """Raised when a precision budget cannot be met at the allowed recursion depth."""


class CacheError(QKCError, ValueError):
    pass


class DecodeError(QKCError, ValueError):
    pass


class TruncatedStreamError(DecodeError):
    pass


class OpcodeRangeError(DecodeError):
    pass


class OperandRangeError(DecodeError):
    pass


class TrailingBitsError(DecodeError):
    pass


class DecompositionError(QKCError, ValueError):
    pass


class ZeroProbabilityError(QKCError):
    pass
