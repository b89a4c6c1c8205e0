"""Scalar special functions and the closed-form cubic root.

Every function accepts a float or a NumPy array and evaluates elementwise.
Scalar inputs give NumPy float64 scalars back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from tanhvol.errors import DomainError

SQRT_TWO = 1.4142135623730950488016887242096980785696718753769
SQRT_PI = 1.7724538509055160272981674833411451827975494561224
SQRT_TWO_PI = 2.5066282746310005024157652848110452530069867406099
ONE_OVER_SQRT_TWO_PI = 0.39894228040143267793994605993438186847585863116493


def norm_cdf(x):
    """Standard normal CDF, N(x) = erfc(-x / sqrt(2)) / 2."""
    x = np.asarray(x, dtype=float)
    return 0.5 * special.erfc(-x / SQRT_TWO)[()]


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return (ONE_OVER_SQRT_TWO_PI * np.exp(-0.5 * x * x))[()]


def erf(z):
    return special.erf(np.asarray(z, dtype=float))[()]


def scaled_norm_tail(a):
    """Return exp(a**2 / 2) * N(-a) without forming either factor.

    Uses the scaled complementary error function, so it stays finite for
    arguments where exp(a**2/2) overflows and N(-a) underflows.
    """
    a = np.asarray(a, dtype=float)
    return (0.5 * special.erfcx(a / SQRT_TWO))[()]


def arctanh(x):
    """Inverse hyperbolic tangent, 0.5 * log((1 + x) / (1 - x)), on (-1, 1)."""
    x = np.asarray(x, dtype=float)
    if np.any(~(np.abs(x) < 1.0)):
        raise DomainError("arctanh requires -1 < x < 1")
    return np.arctanh(x)[()]


@dataclass(frozen=True)
class DepressedCubic:
    """The equation x**3 + 3*p*x = 2*q; p > 0 gives exactly one real root."""

    p: float
    q: float

    def residual(self, x):
        return x**3 + 3.0 * self.p * x - 2.0 * self.q


def cardano_unique_real_root(cubic: DepressedCubic):
    """Unique real root of x**3 + 3*p*x = 2*q for p > 0.

    With s = sqrt(p**3 + q**2), the root is cbrt(s + q) - cbrt(s - q).
    Writing A = cbrt(s + |q|) and B = p / A = cbrt(s - |q|), the difference
    A - B equals 2|q| / (A**2 + A*B + B**2), which has no cancellation for
    any ratio of q to p.  The root carries the sign of q.
    """
    p = np.asarray(cubic.p, dtype=float)
    q = np.asarray(cubic.q, dtype=float)
    if np.any(~(p > 0.0)):
        raise DomainError("depressed cubic needs p > 0 for a unique real root")
    aq = np.abs(q)
    s = np.hypot(p * np.sqrt(p), aq)
    a = np.cbrt(s + aq)
    b = p / a
    root = np.copysign(2.0 * aq / (a * a + p + b * b), q)
    return root[()]
