"""Closed-form implied volatility from the tanh surrogates.

Away from the money the surrogate call is inverted through a quadratic in
x = sigma*sqrt(T)/alpha; at the money the three tanh surrogates give a
logarithm (THETA0) or a depressed cubic (THETA1, THETA2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from tanhvol.black_scholes import CallQuote, NormalizedTerms, check_arbitrage_bounds
from tanhvol.core_math import DepressedCubic, cardano_unique_real_root
from tanhvol.errors import BoundViolationError, InvalidInputError
from tanhvol.standardized import EPS_ATM, alpha_of
from tanhvol.surrogate import THETA2_A, THETA2_B, AtmKind, coefficients

DEFAULT_ATM_KIND = AtmKind.THETA2

ATM1_P = 4.0 / (4.0 - math.pi)
ATM1_Q_SCALE = 3.0 / (4.0 - math.pi)
ATM2_P = THETA2_A / (3.0 * THETA2_B)
ATM2_Q_SCALE = 1.0 / (4.0 * THETA2_B)


class Method(enum.Enum):
    TANH_GENERAL = "tanh_general"
    ATM0 = "atm0"
    ATM1 = "atm1"
    ATM2 = "atm2"
    ORACLE_NEWTON = "oracle_newton"
    BRENNER_SUBRAHMANYAM = "brenner_subrahmanyam"
    CORRADO_MILLER = "corrado_miller"
    LI = "li"


ATM_METHODS = {
    AtmKind.THETA0: Method.ATM0,
    AtmKind.THETA1: Method.ATM1,
    AtmKind.THETA2: Method.ATM2,
}


@dataclass(frozen=True)
class VolEstimate:
    sigma_hat: float
    method: Method


def lambda_of(quote: CallQuote):
    """Lambda = 0.5 * log((C - max(S - X, 0)) / (S - C))."""
    terms = quote.terms
    check_arbitrage_bounds(terms, quote.price)
    c = np.asarray(quote.price, dtype=float)
    return (0.5 * np.log((c - terms.intrinsic) / (terms.spot - c)))[()]


def positive_quadratic_root(c1, c2, rhs):
    """Positive root of c1*x - c2/x = rhs, i.e. c1*x**2 - rhs*x - c2 = 0.

    For negative rhs the textbook form cancels; there the root is taken from
    the product of roots, x = 2*c2 / (sqrt(rhs**2 + 4*c1*c2) - rhs).
    """
    rhs = np.asarray(rhs, dtype=float)
    root = np.sqrt(rhs * rhs + 4.0 * c1 * c2)
    with np.errstate(divide="ignore", invalid="ignore"):
        plus = (rhs + root) / (2.0 * c1)
        minus = 2.0 * c2 / (root - rhs)
    return np.where(rhs >= 0.0, plus, minus)[()]


def implied_vol_tanh(quote: CallQuote) -> VolEstimate:
    """Exact inverse of :func:`tanhvol.surrogate.call_hat`.

    sigma_hat = alpha / (2*c1*sqrt(T)) *
                (Lambda - c3 + sqrt((Lambda - c3)**2 + 4*c1*c2))
    """
    terms = quote.terms
    alpha = alpha_of(terms)
    lam = lambda_of(quote)
    coeffs = coefficients(alpha)
    x = positive_quadratic_root(coeffs.c1, coeffs.c2, lam - coeffs.c3)
    sigma = alpha * x / np.sqrt(terms.maturity)
    return VolEstimate(np.asarray(sigma)[()], Method.TANH_GENERAL)


def atm_vol_from_price(kind: AtmKind, spot, maturity, price):
    """Invert the ATM surrogate of ``kind`` for 0 <= C < S.

    THETA0: sqrt(pi/(2T)) * L
    THETA1: sqrt(2*pi/T) * cardano(p=4/(4-pi), q=3/(4-pi) * L)
    THETA2: sqrt(8/T) * cardano(p=a/(3b), q=L/(4b))
    where L = log((S + C)/(S - C)).  C = 0 maps to sigma = 0.
    """
    kind = AtmKind(kind)
    spot = np.asarray(spot, dtype=float)
    maturity = np.asarray(maturity, dtype=float)
    c = np.asarray(price, dtype=float)
    if np.any(~(spot > 0.0)) or np.any(~(maturity > 0.0)):
        raise InvalidInputError("spot and maturity must be positive")
    if np.any(~((c >= 0.0) & (c < spot))):
        raise BoundViolationError("ATM call price must satisfy 0 <= C < S")
    log_ratio = np.log1p(2.0 * c / (spot - c))
    if kind is AtmKind.THETA0:
        sigma = np.sqrt(math.pi / (2.0 * maturity)) * log_ratio
    elif kind is AtmKind.THETA1:
        root = cardano_unique_real_root(DepressedCubic(ATM1_P, ATM1_Q_SCALE * log_ratio))
        sigma = np.sqrt(2.0 * math.pi / maturity) * root
    else:
        root = cardano_unique_real_root(DepressedCubic(ATM2_P, ATM2_Q_SCALE * log_ratio))
        sigma = np.sqrt(8.0 / maturity) * root
    return np.asarray(sigma)[()]


def atm_implied_vol(kind: AtmKind, quote: CallQuote) -> VolEstimate:
    """ATM inverse for a quote whose discounted strike is treated as S."""
    kind = AtmKind(kind)
    terms = quote.terms
    c = np.asarray(quote.price, dtype=float)
    if np.any(~((c > 0.0) & (c < np.asarray(terms.spot)))):
        raise BoundViolationError("ATM call price must satisfy 0 < C < S")
    sigma = atm_vol_from_price(kind, terms.spot, terms.maturity, c)
    return VolEstimate(sigma, ATM_METHODS[kind])


def is_atm(terms: NormalizedTerms):
    return (np.abs(terms.log_moneyness) < EPS_ATM)[()]


def implied_vol(quote: CallQuote, preference: AtmKind = DEFAULT_ATM_KIND) -> VolEstimate:
    """Closed-form implied volatility, choosing the branch by moneyness.

    Quotes with |log(S/X)| below the ATM band are priced as S == X and go
    to the ATM inverse of ``preference``; all others use the general
    quadratic inverse.  Array quotes get ``method`` as an array of tags.
    """
    preference = AtmKind(preference)
    terms = quote.terms
    atm = np.asarray(is_atm(terms))
    if atm.ndim == 0:
        if atm:
            atm_terms = NormalizedTerms(terms.spot, terms.spot, terms.maturity)
            return atm_implied_vol(preference, CallQuote(atm_terms, quote.price))
        return implied_vol_tanh(quote)

    shape = np.broadcast(terms.spot, terms.discounted_strike, terms.maturity, quote.price).shape
    s, k, t, c = (
        np.broadcast_to(np.asarray(v, dtype=float), shape)
        for v in (terms.spot, terms.discounted_strike, terms.maturity, quote.price)
    )
    atm = np.broadcast_to(atm, shape)
    sigma = np.empty(shape)
    methods = np.empty(shape, dtype=object)
    if atm.any():
        sub = NormalizedTerms(s[atm], s[atm], t[atm])
        sigma[atm] = atm_implied_vol(preference, CallQuote(sub, c[atm])).sigma_hat
        methods[atm] = ATM_METHODS[preference]
    rest = ~atm
    if rest.any():
        sub = NormalizedTerms(s[rest], k[rest], t[rest])
        sigma[rest] = implied_vol_tanh(CallQuote(sub, c[rest])).sigma_hat
        methods[rest] = Method.TANH_GENERAL
    return VolEstimate(sigma, methods)
