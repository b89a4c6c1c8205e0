"""Hyperbolic-tangent surrogate of the standardized call and of the ATM call.

For S != X the standardized call chi_alpha is replaced by

    chi_hat_alpha(x) = (1 + tanh(phi(x))) / 2,   phi(x) = c1*x - c2/x + c3,

with (c1, c2, c3) chosen so that chi_hat matches chi's value and slope at
the inflection point x = 1 and has its own inflection there.  For S == X
the call is S*erf(sigma*sqrt(T/8)) and erf is replaced by one of three
tanh-based functions.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from tanhvol.black_scholes import NormalizedTerms
from tanhvol.core_math import ONE_OVER_SQRT_TWO_PI, SQRT_PI
from tanhvol.errors import ConditioningError, DomainError, InvalidInputError
from tanhvol.standardized import (
    chi_at_one,
    from_standardized,
    one_minus_two_chi_at_one,
    standardized_point,
)

# chi(1) below this makes the coefficient formulas divide by ~0.
CHI_ONE_FLOOR = 1e-12

THETA2_A = 1.129324
THETA2_B = 0.100303

TWO_OVER_SQRT_PI = 2.0 / SQRT_PI
THETA1_CUBIC = (8.0 - 2.0 * math.pi) / (3.0 * SQRT_PI**3)
ATM1_CUBIC = (4.0 - math.pi) / 12.0


@dataclass(frozen=True)
class SurrogateCoefficients:
    c1: float
    c2: float
    c3: float
    alpha: float


class AtmKind(enum.Enum):
    """tanh replacements for erf in the at-the-money call."""

    THETA0 = "theta0"
    THETA1 = "theta1"
    THETA2 = "theta2"


def _coefficient_arrays(alpha):
    alpha = np.asarray(alpha, dtype=float)
    if np.any(~(alpha > 0.0)) or np.any(~np.isfinite(alpha)):
        raise DomainError("alpha must be positive and finite")
    chi1 = chi_at_one(alpha)
    if np.any(chi1 < CHI_ONE_FLOOR):
        raise ConditioningError(
            "chi(1) is below 1e-12; alpha is too small, use the ATM formulas"
        )
    # d = 1 - 2*chi(1) taken from its closed form, never by subtraction
    d = one_minus_two_chi_at_one(alpha)
    slope = alpha * ONE_OVER_SQRT_TWO_PI
    spread = chi1 * (0.5 * (1.0 + d))
    denom = spread * spread
    c2 = d * slope * slope / (4.0 * denom)
    c1 = slope * (2.0 * spread - d * slope) / (4.0 * denom)
    # arctanh(2*chi(1) - 1) = -0.5*log((1 + d) / (2*chi(1)))
    c3 = -0.5 * np.log((1.0 + d) / (2.0 * chi1)) + slope * (d * slope - spread) / (
        2.0 * denom
    )
    return c1, c2, c3, alpha


@functools.lru_cache(maxsize=4096)
def _cached_coefficients(alpha: float) -> SurrogateCoefficients:
    c1, c2, c3, a = _coefficient_arrays(alpha)
    return SurrogateCoefficients(float(c1), float(c2), float(c3), float(a))


def coefficients(alpha) -> SurrogateCoefficients:
    """Coefficients (c1, c2, c3) of phi for one alpha or an array of alphas.

    Scalar calls are memoized per alpha value; the cache returns exactly the
    numbers an uncached evaluation would produce.
    """
    if np.ndim(alpha) == 0:
        return _cached_coefficients(float(alpha))
    c1, c2, c3, a = _coefficient_arrays(alpha)
    return SurrogateCoefficients(c1, c2, c3, a)


def phi(coeffs: SurrogateCoefficients, x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0.0)):
        raise DomainError("x must be positive")
    return (coeffs.c1 * x - coeffs.c2 / x + coeffs.c3)[()]


def phi_prime(coeffs: SurrogateCoefficients, x):
    x = np.asarray(x, dtype=float)
    return (coeffs.c1 + coeffs.c2 / (x * x))[()]


def chi_hat(alpha, x):
    """(1 + tanh(phi(x))) / 2, evaluated as the logistic 1/(1 + exp(-2*phi))."""
    return special.expit(2.0 * phi(coefficients(alpha), x))[()]


def chi_hat_prime(alpha, x):
    coeffs = coefficients(alpha)
    s = special.expit(2.0 * phi(coeffs, x))
    return (2.0 * s * (1.0 - s) * phi_prime(coeffs, x))[()]


def chi_hat_second(alpha, x):
    """(1 - tanh^2) / 2 * (phi'' - 2*tanh*phi'^2) with phi'' = -2*c2/x**3."""
    coeffs = coefficients(alpha)
    x = np.asarray(x, dtype=float)
    f = phi(coeffs, x)
    th = np.tanh(f)
    sech2 = 4.0 * special.expit(2.0 * f) * special.expit(-2.0 * f)
    dphi = phi_prime(coeffs, x)
    return (0.5 * sech2 * (-2.0 * coeffs.c2 / x**3 - 2.0 * th * dphi * dphi))[()]


def call_hat(terms: NormalizedTerms, sigma):
    """Closed-form surrogate of the Black-Scholes call for S != X."""
    alpha, x = standardized_point(terms, sigma)
    return from_standardized(terms, chi_hat(alpha, x))


def _atm_args(spot, maturity, sigma):
    spot = np.asarray(spot, dtype=float)
    maturity = np.asarray(maturity, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(spot > 0.0)) or np.any(~(maturity > 0.0)):
        raise InvalidInputError("spot and maturity must be positive")
    if np.any(~(sigma >= 0.0)):
        raise InvalidInputError("sigma must be nonnegative")
    return spot, maturity, sigma


def atm_call_exact(spot, maturity, sigma):
    """At-the-money Black-Scholes call, S * erf(sigma * sqrt(T/8))."""
    spot, maturity, sigma = _atm_args(spot, maturity, sigma)
    return (spot * special.erf(sigma * np.sqrt(maturity / 8.0)))[()]


def theta(kind: AtmKind, z):
    kind = AtmKind(kind)
    z = np.asarray(z, dtype=float)
    if kind is AtmKind.THETA0:
        arg = TWO_OVER_SQRT_PI * z
    elif kind is AtmKind.THETA1:
        arg = TWO_OVER_SQRT_PI * z + THETA1_CUBIC * z**3
    else:
        arg = THETA2_A * z + THETA2_B * z**3
    return np.tanh(arg)[()]


def atm_call_hat(kind: AtmKind, spot, maturity, sigma):
    """tanh surrogate of the at-the-money call.

    THETA0: S*tanh(y), THETA1: S*tanh(y + (4 - pi)/12 * y**3) with
    y = sigma*sqrt(T/(2*pi)); THETA2: S*tanh(a*w + b*w**3) with
    w = sigma*sqrt(T/8).
    """
    kind = AtmKind(kind)
    spot, maturity, sigma = _atm_args(spot, maturity, sigma)
    if kind is AtmKind.THETA2:
        w = sigma * np.sqrt(maturity / 8.0)
        arg = THETA2_A * w + THETA2_B * w**3
    else:
        y = sigma * np.sqrt(maturity / (2.0 * math.pi))
        arg = y if kind is AtmKind.THETA0 else y + ATM1_CUBIC * y**3
    return (spot * np.tanh(arg))[()]
