"""Scalar special-function kernel.

Self-contained evaluation of the modified Bessel function I_nu, the lower
incomplete gamma function, the exact Marcum Q_1 function, and the
exponential Marcum-Q approximation used by the closed-form connectivity
integrals.  Everything is computed from series / continued fractions with
log-domain fallbacks, so the rest of the library has one consistent set of
numeric conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

# Exponent magnitude beyond which exp() is evaluated in the log domain
# (double precision overflows near exp(709)).
EXP_OVERFLOW = 700.0

# Printed quartic coefficients of mu(a) and nu(a) for
# Q_1(a, b) ~ exp(-exp(nu(a)) * b**mu(a)); stored verbatim, no re-fitting.
MU_COEFFS = (2.174, -0.592, 0.593, -0.092, 0.005)
NU_COEFFS = (-0.840, 0.327, -0.740, 0.083, -0.004)


@dataclass(frozen=True)
class Tolerance:
    """Absolute truncation tolerance and term cap for the series kernels."""

    abs_tol: float = 1e-12
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_TOL = Tolerance()


def bessel_i(nu: int, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Modified Bessel function of the first kind I_nu(x), integer nu >= 0.

    Raises OverflowError for x > EXP_OVERFLOW; callers needing larger
    arguments should use :func:`log_bessel_i`.
    """
    if nu < 0 or nu != int(nu):
        raise ValueError("nu must be a non-negative integer")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x > EXP_OVERFLOW:
        raise OverflowError(
            f"bessel_i overflows for x > {EXP_OVERFLOW}; use log_bessel_i"
        )
    nu = int(nu)
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    # Ascending series: sum_m (x/2)^(2m+nu) / (m! (m+nu)!)
    half = 0.5 * x
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1))
    total = term
    for m in range(1, tol.max_terms):
        term *= half * half / (m * (m + nu))
        total += term
        if term < tol.abs_tol * (1.0 + total):
            break
    return total


def log_bessel_i(nu: int, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """log I_nu(x) for integer nu >= 0, stable for large x."""
    if nu < 0 or nu != int(nu):
        raise ValueError("nu must be a non-negative integer")
    if x < 0:
        raise ValueError("x must be >= 0")
    nu = int(nu)
    if x == 0.0:
        return 0.0 if nu == 0 else -math.inf
    half = 0.5 * x
    log_half = math.log(half)
    m = np.arange(_series_len(half, tol))
    log_terms = (2 * m + nu) * log_half - gammaln(m + 1) - gammaln(m + nu + 1)
    peak = log_terms.max()
    return peak + math.log(np.exp(log_terms - peak).sum())


def _series_len(half_x: float, tol: Tolerance) -> int:
    # Series terms peak near m ~ x/2; the margin covers the tail down to
    # well below abs_tol relative accuracy.
    n = int(half_x + 14.0 * math.sqrt(half_x + 1.0) + 40.0)
    return min(n, tol.max_terms)


def lower_incomplete_gamma(s: float, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Lower incomplete gamma gamma(s, x), s > 0, x >= 0.

    Power series for x < s + 1, Lentz continued fraction for the upper
    tail otherwise (the complementary form also covers very large x where
    the series weight underflows).
    """
    if s <= 0:
        raise ValueError("s must be > 0")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0.0:
        return 0.0
    log_pref = s * math.log(x) - x
    if x < s + 1.0:
        # gamma(s,x) = x^s e^-x sum_n x^n / (s (s+1) ... (s+n))
        term = 1.0 / s
        total = term
        for n in range(1, tol.max_terms):
            term *= x / (s + n)
            total += term
            if term < tol.abs_tol * total:
                break
        if log_pref < -EXP_OVERFLOW:
            return 0.0
        return math.exp(log_pref) * total
    # Continued fraction for Gamma(s) - gamma(s, x) (modified Lentz).
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    frac = d
    for n in range(1, tol.max_terms):
        an = -n * (n - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        frac *= delta
        if abs(delta - 1.0) < tol.abs_tol:
            break
    upper = math.exp(log_pref) * frac if log_pref > -EXP_OVERFLOW else 0.0
    return math.gamma(s) - upper


def marcum_q1(a: float, b: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Exact Marcum Q-function Q_1(a, b) by Bessel series.

    For b > a the direct series
        Q_1(a,b) = exp(-(a^2+b^2)/2) sum_k (a/b)^k I_k(ab)
    is used; for b <= a the complementary identity
        Q_1(a,b) = 1 - exp(-(a^2+b^2)/2) sum_{k>=1} (b/a)^k I_k(ab)
    keeps the summand ratio below one.  All exponential weights are
    combined in the log domain, so large arguments do not overflow.
    """
    if a < 0 or b < 0:
        raise ValueError("a and b must be >= 0")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return math.exp(-0.5 * b * b) if 0.5 * b * b < EXP_OVERFLOW else 0.0
    direct = b > a
    lo, hi = (a, b) if direct else (b, a)
    ratio = lo / hi
    x = a * b
    log_scale = -0.5 * (hi - lo) ** 2  # -(a^2+b^2)/2 + ab
    k0 = 0 if direct else 1
    k_max = _series_len(x, tol) + k0
    if ratio < 1.0:
        k_cut = int(-math.log(tol.abs_tol * 1e-3) / -math.log(ratio)) + 2
        k_max = min(k_max, k0 + k_cut)
    k = np.arange(k0, k_max)
    m = np.arange(_series_len(0.5 * x, tol))
    # log I_k(x) for all k at once, then scale by exp(-x).
    log_terms = (
        (2 * m[None, :] + k[:, None]) * math.log(0.5 * x)
        - gammaln(m + 1)[None, :]
        - gammaln(m[None, :] + k[:, None] + 1)
    )
    peak = log_terms.max()
    log_ik = peak + np.log(np.exp(log_terms - peak).sum(axis=1))
    weights = np.exp(k * math.log(ratio) + log_ik - x + log_scale)
    total = float(weights.sum())
    q = total if direct else 1.0 - total
    return min(max(q, 0.0), 1.0)


def marcum_mu(a: float) -> float:
    """Quartic mu(a) of the exponential Marcum-Q approximation."""
    return float(np.polynomial.polynomial.polyval(a, MU_COEFFS))


def marcum_nu(a: float) -> float:
    """Quartic nu(a) of the exponential Marcum-Q approximation."""
    return float(np.polynomial.polynomial.polyval(a, NU_COEFFS))


def marcum_q1_approx(a: float, b: float) -> float:
    """Exponential approximation Q_1(a,b) ~ exp(-exp(nu(a)) b^mu(a))."""
    if a < 0 or b < 0:
        raise ValueError("a and b must be >= 0")
    if b == 0.0:
        return 1.0
    exponent = marcum_nu(a) + marcum_mu(a) * math.log(b)
    if exponent > EXP_OVERFLOW:
        return 0.0
    return math.exp(-math.exp(exponent))
