"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so keep the categories coarse.
"""


class AuctionLabError(Exception):
    """Base class for all library errors."""


class ValidationError(AuctionLabError, ValueError):
    """Malformed input: bad distribution schema, masses not summing to 1, etc."""


class DomainError(AuctionLabError, ValueError):
    """Argument outside the domain of an operation (q > 1, t below support...)."""


class UndefinedPointError(DomainError):
    """Density-based quantity requested at an atom or outside the support."""


class DivergenceError(AuctionLabError, ArithmeticError):
    """An integral that the caller needs finite is infinite."""


class ContractError(AuctionLabError):
    """A documented precondition of the operation does not hold."""


class CapabilityError(AuctionLabError):
    """The request is well formed but exceeds what the evaluator supports."""
