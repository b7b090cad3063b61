"""Scalar special functions and Black-Scholes utilities.

All functions are pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

from .errors import ConvergenceError, DomainError

__all__ = [
    "gamma",
    "lower_incomplete_gamma",
    "bs_call_price",
    "bs_vega",
    "implied_vol",
]


def gamma(x: float) -> float:
    """Gamma function on the real line, poles excluded."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"gamma pole at x={x}")
    try:
        return math.gamma(x)
    except (ValueError, OverflowError) as exc:  # pragma: no cover - guarded above
        raise DomainError(f"gamma undefined or overflowing at x={x}") from exc


def lower_incomplete_gamma(s: float, x: float) -> float:
    """Lower incomplete gamma integral of t^(s-1) e^(-t) over [0, x]."""
    s = float(s)
    x = float(x)
    if s <= 0.0:
        raise DomainError(f"lower_incomplete_gamma requires s > 0, got s={s}")
    if x < 0.0:
        raise DomainError(f"lower_incomplete_gamma requires x >= 0, got x={x}")
    # regularized P(s, x) from scipy times Gamma(s); accurate to ~1e-14 relative
    return float(_sp.gammainc(s, x)) * math.gamma(s)


def _norm_cdf(x):
    return _sp.ndtr(x)


def bs_call_price(s0, strike, t, sigma):
    """Black-Scholes call value with zero rates and dividends.

    Accepts scalars or numpy arrays (broadcast). sigma=0 returns intrinsic.
    """
    s0 = np.asarray(s0, dtype=float)
    strike = np.asarray(strike, dtype=float)
    t = np.asarray(t, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(s0 <= 0) or np.any(strike <= 0) or np.any(t <= 0):
        raise DomainError("bs_call_price requires s0, strike, t > 0")
    if np.any(sigma < 0):
        raise DomainError("bs_call_price requires sigma >= 0")

    stddev = sigma * np.sqrt(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(s0 / strike) + 0.5 * stddev**2) / stddev
    d2 = d1 - stddev
    value = s0 * _norm_cdf(d1) - strike * _norm_cdf(d2)
    intrinsic = np.maximum(s0 - strike, 0.0)
    value = np.where(stddev == 0.0, intrinsic, value)
    # guard against round-off leaking outside the arbitrage band
    value = np.minimum(np.maximum(value, intrinsic), s0)
    return value if value.ndim else float(value)


def bs_vega(s0, strike, t, sigma):
    """Derivative of the call value in sigma."""
    stddev = sigma * math.sqrt(t)
    if stddev == 0.0:
        return 0.0
    d1 = (math.log(s0 / strike) + 0.5 * stddev * stddev) / stddev
    return s0 * math.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi) * math.sqrt(t)


def bs_put_price(s0, strike, t, sigma):
    """Black-Scholes put value; evaluated directly so OTM puts keep full
    relative precision (the parity form loses it to cancellation)."""
    s0 = np.asarray(s0, dtype=float)
    strike = np.asarray(strike, dtype=float)
    t = np.asarray(t, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    stddev = sigma * np.sqrt(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(s0 / strike) + 0.5 * stddev**2) / stddev
    d2 = d1 - stddev
    value = strike * _norm_cdf(-d2) - s0 * _norm_cdf(-d1)
    intrinsic = np.maximum(strike - s0, 0.0)
    value = np.where(stddev == 0.0, intrinsic, value)
    value = np.minimum(np.maximum(value, intrinsic), strike)
    return value if value.ndim else float(value)


def _vol_initial_guess(price, s0, strike, t):
    # Corrado-Miller style rational approximation, clipped to a sane range.
    disc = price - 0.5 * (s0 - strike)
    rad = disc * disc - (s0 - strike) ** 2 / math.pi
    rad = math.sqrt(rad) if rad > 0.0 else 0.0
    guess = math.sqrt(2.0 * math.pi / t) / (s0 + strike) * (disc + rad)
    if not math.isfinite(guess) or guess <= 0.0:
        guess = math.sqrt(2.0 * math.pi / t) * price / s0
    return min(max(guess, 1e-4), 5.0)


def implied_vol(price, s0, strike, t, tol: float = 1e-13, max_iter: int = 200):
    """Invert bs_call_price in sigma.

    Safeguarded Newton: every iterate stays inside a shrinking bisection
    bracket, so the absolute error is below ``tol`` even when vega degenerates
    at extreme moneyness.  In-the-money inputs are inverted through the put
    value (parity), which preserves relative precision where the call price
    collapses onto its intrinsic value.
    """
    price = float(price)
    s0 = float(s0)
    strike = float(strike)
    t = float(t)
    if s0 <= 0 or strike <= 0 or t <= 0:
        raise DomainError("implied_vol requires s0, strike, t > 0")
    intrinsic = max(s0 - strike, 0.0)
    if not (intrinsic < price < s0):
        raise DomainError(
            f"price {price} outside arbitrage bounds ({intrinsic}, {s0})"
        )

    if strike < s0:
        target = price - (s0 - strike)  # time value = put price
        value = lambda sigma: bs_put_price(s0, strike, t, sigma)
    else:
        target = price
        value = lambda sigma: bs_call_price(s0, strike, t, sigma)

    lo, hi = 0.0, 1.0
    while value(hi) < target:
        hi *= 2.0
        if hi > 1e4:  # price < s0 guarantees termination well before this
            raise ConvergenceError(f"could not bracket implied vol for price {price}")

    sigma = min(max(_vol_initial_guess(price, s0, strike, t), lo), hi)
    for _ in range(max_iter):
        diff = value(sigma) - target
        if diff > 0.0:
            hi = sigma
        else:
            lo = sigma
        if hi - lo <= tol:
            break
        vega = bs_vega(s0, strike, t, sigma)
        step_ok = False
        if vega > 1e-300 and math.isfinite(diff):
            candidate = sigma - diff / vega
            if lo < candidate < hi:
                sigma = candidate
                step_ok = True
        if not step_ok:
            sigma = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)
