"""The standardized call family chi_alpha and its reduction from market calls.

For alpha > 0 and x > 0::

    chi_alpha(x) = N(alpha/2 * (x - 1/x)) - exp(alpha**2/2) * N(-alpha/2 * (x + 1/x))

Every non-ATM Black-Scholes call is an affine image of one member of this
family, evaluated at x = sigma * sqrt(T) / alpha with
alpha = sqrt(2 * |log(S/X)|).
"""

from __future__ import annotations

import numpy as np
from scipy import special

from tanhvol.black_scholes import NormalizedTerms
from tanhvol.core_math import ONE_OVER_SQRT_TWO_PI, SQRT_TWO, norm_cdf
from tanhvol.errors import AtmDegenerateError, DomainError, InvalidInputError, OverflowGuardError

# |log(S/X)| below this is treated as at-the-money.
EPS_ATM = 1e-6


def _check_domain(alpha, x):
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~(alpha > 0.0)) or np.any(~np.isfinite(alpha)):
        raise DomainError("alpha must be positive and finite")
    if np.any(~(x > 0.0)):
        raise DomainError("x must be positive")
    return alpha, x


def alpha_of(terms: NormalizedTerms):
    """alpha = sqrt(2 * |log(S/X)|); raises inside the ATM band."""
    log_m = np.abs(terms.log_moneyness)
    if np.any(log_m < EPS_ATM):
        raise AtmDegenerateError(
            f"|log(S/X)| < {EPS_ATM}: use the at-the-money formulas"
        )
    return np.sqrt(2.0 * log_m)[()]


def chi_at_one(alpha):
    """chi_alpha(1) = 1/2 - exp(alpha**2/2) * N(-alpha).

    With t = alpha/sqrt(2) this is (1 - erfcx(t)) / 2.  For t < 1 the
    difference is rewritten as exp(t**2)*erf(t) - expm1(t**2) so that small
    alpha keeps full relative precision.
    """
    alpha = np.asarray(alpha, dtype=float)
    t = alpha / SQRT_TWO
    small = np.where(t < 1.0, t, 0.0)
    near = np.exp(small * small) * special.erf(small) - np.expm1(small * small)
    far = 1.0 - special.erfcx(t)
    return (0.5 * np.where(t < 1.0, near, far))[()]


def one_minus_two_chi_at_one(alpha):
    """1 - 2*chi_alpha(1) = 2*exp(alpha**2/2)*N(-alpha), computed directly."""
    return special.erfcx(np.asarray(alpha, dtype=float) / SQRT_TWO)[()]


def chi(alpha, x):
    """Standardized call function, valued in (0, 1) and increasing in x.

    Both normal terms are expressed through the scaled complementary error
    function: exp(alpha**2/2) * N(-v) * ... collapses to
    exp(-a**2/2) * erfcx(v/sqrt(2)) / 2 with a = alpha/2 * (x - 1/x), so no
    factor overflows.  Left of the inflection point (x < 1) the first term
    is rewritten the same way and the two scaled tails are subtracted
    before multiplying by the common Gaussian factor.
    """
    alpha, x = _check_domain(alpha, x)
    a = 0.5 * alpha * (x - 1.0 / x)
    v = 0.5 * alpha * (x + 1.0 / x)
    gauss = 0.5 * np.exp(-0.5 * a * a)
    tail_v = special.erfcx(v / SQRT_TWO)
    neg_a = np.maximum(-a, 0.0)
    left = gauss * (special.erfcx(neg_a / SQRT_TWO) - tail_v)
    right = norm_cdf(a) - gauss * tail_v
    out = np.where(a < 0.0, left, right)
    if not np.all(np.isfinite(out)):
        raise OverflowGuardError("chi is not finite for the given alpha, x")
    return out[()]


def chi_prime(alpha, x):
    """d chi / dx = alpha/sqrt(2*pi) * exp(-alpha**2/8 * (x - 1/x)**2)."""
    alpha, x = _check_domain(alpha, x)
    a = 0.5 * alpha * (x - 1.0 / x)
    return (alpha * ONE_OVER_SQRT_TWO_PI * np.exp(-0.5 * a * a))[()]


def chi_second(alpha, x):
    """d2 chi / dx2 = alpha**3/(4*sqrt(2*pi)) * exp(...) * (1 - x**4)/x**3.

    Evaluated in log space so that tiny or huge x never forms inf * 0.
    Exactly zero at x = 1.
    """
    alpha, x = _check_domain(alpha, x)
    a = 0.5 * alpha * (x - 1.0 / x)
    log_x = np.log(x)
    with np.errstate(divide="ignore", over="ignore"):
        # log|1 - x**4| - 3*log(x), split so x**4 never overflows
        log_poly = np.where(
            x < 1.0,
            np.log1p(-np.minimum(x, 1.0) ** 4) - 3.0 * log_x,
            np.log(-np.expm1(-4.0 * np.maximum(log_x, 0.0))) + log_x,
        )
        log_mag = np.log(alpha**3 * 0.25 * ONE_OVER_SQRT_TWO_PI) - 0.5 * a * a + log_poly
    return (np.sign(1.0 - x) * np.exp(log_mag))[()]


def standardized_point(terms: NormalizedTerms, sigma):
    """Map (terms, sigma) to (alpha, x) with x = sigma*sqrt(T)/alpha."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0.0)):
        raise InvalidInputError("sigma must be positive")
    alpha = alpha_of(terms)
    return alpha, (sigma * np.sqrt(terms.maturity) / alpha)[()]


def from_standardized(terms: NormalizedTerms, value):
    """Undo the reduction: S*value if X > S, else S - X + X*value."""
    s = np.asarray(terms.spot, dtype=float)
    k = np.asarray(terms.discounted_strike, dtype=float)
    return np.where(k > s, s * value, (s - k) + k * value)[()]


def call_from_chi(terms: NormalizedTerms, sigma):
    """Black-Scholes call price rebuilt from chi_alpha; exact for S != X."""
    alpha, x = standardized_point(terms, sigma)
    return from_standardized(terms, chi(alpha, x))
