"""Closed-form implied-volatility formulas from the literature, used as benchmarks.

Formulas, with X the discounted strike:

Brenner-Subrahmanyam, first-order ATM expansion::

    sigma = sqrt(2*pi/T) * C / S

Corrado-Miller::

    m = C - (S - X)/2
    sigma = sqrt(2*pi/T) / (S + X) * (m + sqrt(m**2 - (S - X)**2 / pi))

  unavailable when the radicand is negative.

Li::

    a   = sqrt(2*pi) / (S + X) * (2*C + X - S)
    rho = |X - S| * S / C**2
    z   = cos(arccos(3*a / sqrt(32)) / 3)
    rho <= 1.4:  sigma = (2*sqrt(2)*z - sqrt(8*z**2 - 6*a / (sqrt(2)*z))) / sqrt(T)
    rho >  1.4:  sigma = (a + sqrt(a**2 - 4*(X - S)**2 / (S*(X + S)))) / (2*sqrt(T))

  unavailable when the arccos argument leaves [-1, 1] or a radicand is
  negative.  At S == X the first branch is the exact small root of the
  cubic Taylor expansion of the ATM call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from tanhvol.black_scholes import CallQuote, check_arbitrage_bounds
from tanhvol.core_math import SQRT_TWO_PI
from tanhvol.errors import InvalidInputError
from tanhvol.implied_vol import Method, VolEstimate

LI_RHO_SWITCH = 1.4


class ComparatorKind(enum.Enum):
    BRENNER_SUBRAHMANYAM = "bs"
    CORRADO_MILLER = "cm"
    LI = "li"


_METHODS = {
    ComparatorKind.BRENNER_SUBRAHMANYAM: Method.BRENNER_SUBRAHMANYAM,
    ComparatorKind.CORRADO_MILLER: Method.CORRADO_MILLER,
    ComparatorKind.LI: Method.LI,
}


@dataclass(frozen=True)
class Unavailable:
    """The formula has no real value for this quote."""

    method: Method
    reason: str


def brenner_subrahmanyam(s, x, t, c):
    return SQRT_TWO_PI / np.sqrt(t) * c / s


def corrado_miller(s, x, t, c):
    m = c - 0.5 * (s - x)
    radicand = m * m - (s - x) ** 2 / math.pi
    with np.errstate(invalid="ignore"):
        sigma = SQRT_TWO_PI / (np.sqrt(t) * (s + x)) * (m + np.sqrt(radicand))
    return np.where(radicand >= 0.0, sigma, np.nan)


def li(s, x, t, c):
    a = SQRT_TWO_PI / (s + x) * (2.0 * c + x - s)
    rho = np.abs(x - s) * s / (c * c)
    cos_arg = 3.0 * a / math.sqrt(32.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.cos(np.arccos(cos_arg) / 3.0)
        near = 8.0 * z * z - 6.0 * a / (math.sqrt(2.0) * z)
        near_sigma = (2.0 * math.sqrt(2.0) * z - np.sqrt(near)) / np.sqrt(t)
        far = a * a - 4.0 * (x - s) ** 2 / (s * (x + s))
        far_sigma = (a + np.sqrt(far)) / (2.0 * np.sqrt(t))
    near_ok = (np.abs(cos_arg) <= 1.0) & (near >= 0.0) & (near_sigma >= 0.0)
    far_ok = far >= 0.0
    return np.where(
        rho <= LI_RHO_SWITCH,
        np.where(near_ok, near_sigma, np.nan),
        np.where(far_ok, far_sigma, np.nan),
    )


_FORMULAS = {
    ComparatorKind.BRENNER_SUBRAHMANYAM: brenner_subrahmanyam,
    ComparatorKind.CORRADO_MILLER: corrado_miller,
    ComparatorKind.LI: li,
}


def comparator_sigma(kind: ComparatorKind, quote: CallQuote):
    """Vectorized estimates; NaN marks quotes where the formula is unavailable."""
    kind = ComparatorKind(kind)
    terms = quote.terms
    check_arbitrage_bounds(terms, quote.price)
    args = (
        np.asarray(v, dtype=float)
        for v in (terms.spot, terms.discounted_strike, terms.maturity, quote.price)
    )
    sigma = _FORMULAS[kind](*args)
    return np.where(np.isfinite(sigma) & (sigma >= 0.0), sigma, np.nan)[()]


def comparator_iv(kind: ComparatorKind, quote: CallQuote) -> VolEstimate | Unavailable:
    """Estimate for a single quote, or :class:`Unavailable` outside the formula's domain."""
    kind = ComparatorKind(kind)
    sigma = comparator_sigma(kind, quote)
    if np.ndim(sigma):
        raise InvalidInputError("comparator_iv takes a single quote; use comparator_sigma for arrays")
    if np.isnan(sigma):
        return Unavailable(_METHODS[kind], "formula domain condition fails")
    return VolEstimate(float(sigma), _METHODS[kind])
