"""Exception hierarchy shared by the pricing and inversion modules."""


class TanhVolError(ValueError):
    """Base class for every structured error raised by the package."""


class DomainError(TanhVolError):
    """An argument lies outside the mathematical domain of a function."""


class InvalidInputError(TanhVolError):
    """Market inputs are nonpositive or otherwise malformed."""


class BoundViolationError(TanhVolError):
    """A call price lies outside the no-arbitrage interval (max(S - X, 0), S)."""


class AtmDegenerateError(TanhVolError):
    """|log(S/X)| is inside the at-the-money band; use the ATM formulas."""


class ConditioningError(TanhVolError):
    """Surrogate coefficients would be computed from a vanishing chi(1)."""


class OverflowGuardError(TanhVolError):
    """An intermediate exponent left the double-precision range."""


class NoConvergenceError(TanhVolError):
    """The implied-volatility root finder ran out of iterations."""


class ConfigError(TanhVolError):
    """A harness specification is empty or inconsistent."""
