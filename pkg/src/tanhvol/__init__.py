"""Closed-form Black-Scholes implied volatility from hyperbolic-tangent surrogates."""

from tanhvol.black_scholes import (
    CallQuote,
    NormalizedTerms,
    OptionTerms,
    bs_call,
    bs_vega,
    iv_oracle,
    normalize,
)
from tanhvol.comparators import ComparatorKind, Unavailable, comparator_iv
from tanhvol.implied_vol import (
    Method,
    VolEstimate,
    atm_implied_vol,
    implied_vol,
    implied_vol_tanh,
    lambda_of,
)
from tanhvol.standardized import alpha_of, call_from_chi, chi, chi_prime, chi_second
from tanhvol.surrogate import (
    AtmKind,
    SurrogateCoefficients,
    atm_call_exact,
    atm_call_hat,
    call_hat,
    chi_hat,
    coefficients,
    phi,
    theta,
)

__version__ = "0.1.0"
