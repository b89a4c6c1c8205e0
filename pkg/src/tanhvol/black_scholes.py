"""Exact Black-Scholes call pricing and a bracketed Newton implied-vol oracle.

All pricing works on :class:`NormalizedTerms`, where the strike has already
been discounted: ``X = K * exp(-r * T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tanhvol.core_math import SQRT_TWO_PI, norm_cdf, norm_pdf
from tanhvol.errors import BoundViolationError, InvalidInputError, NoConvergenceError

ORACLE_SIGMA_MIN = 1e-8
ORACLE_SIGMA_MAX = 20.0
ORACLE_MAX_ITER = 200
ORACLE_PRICE_TOL = 1e-12


def _require_positive(name, value):
    if np.any(~(np.asarray(value, dtype=float) > 0.0)):
        raise InvalidInputError(f"{name} must be positive")


@dataclass(frozen=True)
class OptionTerms:
    spot: float
    strike: float
    rate: float
    maturity: float

    def __post_init__(self):
        _require_positive("spot", self.spot)
        _require_positive("strike", self.strike)
        _require_positive("maturity", self.maturity)


@dataclass(frozen=True)
class NormalizedTerms:
    """Spot, discounted strike and maturity of a European call."""

    spot: float
    discounted_strike: float
    maturity: float

    def __post_init__(self):
        _require_positive("spot", self.spot)
        _require_positive("discounted_strike", self.discounted_strike)
        _require_positive("maturity", self.maturity)

    @property
    def intrinsic(self):
        return np.maximum(np.subtract(self.spot, self.discounted_strike), 0.0)[()]

    @property
    def log_moneyness(self):
        return np.log(np.divide(self.spot, self.discounted_strike))[()]


@dataclass(frozen=True)
class CallQuote:
    """A call price strictly inside the no-arbitrage interval."""

    terms: NormalizedTerms
    price: float

    def __post_init__(self):
        check_arbitrage_bounds(self.terms, self.price)


def check_arbitrage_bounds(terms: NormalizedTerms, price) -> None:
    c = np.asarray(price, dtype=float)
    inside = (c > terms.intrinsic) & (c < np.asarray(terms.spot))
    if not np.all(inside):
        raise BoundViolationError(
            "call price must satisfy max(S - X, 0) < C < S"
        )


def normalize(terms: OptionTerms) -> NormalizedTerms:
    x = np.multiply(terms.strike, np.exp(-np.multiply(terms.rate, terms.maturity)))
    return NormalizedTerms(terms.spot, x[()], terms.maturity)


def _d1_d2(terms: NormalizedTerms, sigma):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0.0)):
        raise InvalidInputError("sigma must be positive")
    vol = sigma * np.sqrt(terms.maturity)
    d1 = np.log(np.divide(terms.spot, terms.discounted_strike)) / vol + 0.5 * vol
    return d1, d1 - vol


def bs_call(terms: NormalizedTerms, sigma):
    """Black-Scholes call price ``S*N(d1) - X*N(d2)``.

    In the money the price is built as intrinsic value plus the put
    (``X*N(-d2) - S*N(-d1)``) so the small time value is not lost to
    cancellation; the result is clipped to the no-arbitrage interval.
    """
    d1, d2 = _d1_d2(terms, sigma)
    s, k = terms.spot, terms.discounted_strike
    otm = np.multiply(s, norm_cdf(d1)) - np.multiply(k, norm_cdf(d2))
    itm = np.subtract(s, k) + (np.multiply(k, norm_cdf(-d2)) - np.multiply(s, norm_cdf(-d1)))
    price = np.where(np.greater(s, k), itm, otm)
    return np.clip(price, terms.intrinsic, s)[()]


def bs_vega(terms: NormalizedTerms, sigma):
    """Derivative of :func:`bs_call` with respect to sigma, ``S*sqrt(T)*n(d1)``."""
    d1, _ = _d1_d2(terms, sigma)
    return (np.multiply(terms.spot, np.sqrt(terms.maturity)) * norm_pdf(d1))[()]


def iv_oracle(quote: CallQuote) -> float:
    """Implied volatility by Newton's method safeguarded with bisection.

    The root is bracketed on [1e-8, 20].  Newton starts from the
    Brenner-Subrahmanyam guess sqrt(2*pi/T) * C/S clamped into the bracket;
    a Newton step is replaced by bisection when it leaves the current
    bracket or fails to halve the previous step.
    Iteration stops once the step is at roundoff level and the price
    residual is at most 1e-12 * S.
    """
    terms = quote.terms
    if any(np.ndim(v) for v in (terms.spot, terms.discounted_strike, terms.maturity, quote.price)):
        raise InvalidInputError("iv_oracle works on a single quote")
    s = float(terms.spot)
    x = float(terms.discounted_strike)
    t = float(terms.maturity)
    c = float(quote.price)
    single = NormalizedTerms(s, x, t)
    tol = ORACLE_PRICE_TOL * s

    lo, hi = ORACLE_SIGMA_MIN, ORACLE_SIGMA_MAX
    if bs_call(single, hi) < c:
        raise NoConvergenceError(f"implied volatility above {hi}")
    if bs_call(single, lo) >= c:
        # price is indistinguishable from the lower-bound price
        return lo

    sigma = min(max(SQRT_TWO_PI / math.sqrt(t) * c / s, lo), hi)
    last_step = hi - lo
    for _ in range(ORACLE_MAX_ITER):
        diff = float(bs_call(single, sigma)) - c
        if diff == 0.0:
            return sigma
        if diff > 0.0:
            hi = sigma
        else:
            lo = sigma
        vega = float(bs_vega(single, sigma))
        candidate = sigma - diff / vega if vega > 0.0 else math.inf
        # bisect when Newton leaves the bracket or is not halving the last step
        if not lo < candidate < hi or abs(2.0 * diff) > abs(last_step * vega):
            candidate = 0.5 * (lo + hi)
        last_step = candidate - sigma
        sigma = candidate
        if abs(last_step) <= 4.0 * math.ulp(sigma) or hi - lo <= 4.0 * math.ulp(hi):
            if abs(float(bs_call(single, sigma)) - c) <= tol:
                return sigma
            break
    raise NoConvergenceError(
        f"no convergence after {ORACLE_MAX_ITER} iterations "
        f"(S={s}, X={x}, T={t}, C={c})"
    )
