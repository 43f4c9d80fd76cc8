"""Rician random-connection channel model.

A pair of nodes at dimensionless distance r (in wavelengths) whose
dominant signal path has bounced c times off attenuating walls connects
with probability

    H^(c)(r) = Q_1( sqrt(2K), sqrt(2 (K+1) beta r^eta alpha^-c) )

which in approximated form becomes exp(-lambda_c r^kappa).  SNR, rate,
antenna gains and transmit power are all absorbed into beta = 1/r0^eta
(r0 being the typical connection range), so they are deliberately not
separate fields here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun


@dataclass(frozen=True)
class ChannelParams:
    """Radio/channel constants of the Rician connection model.

    Either ``beta`` or ``r0`` may be given; the other is derived through
    beta = 1/r0^eta.  ``omega`` defaults to 1 because the connection
    probability absorbs the Rician scale into beta.
    """

    K: float
    eta: float = 2.0
    alpha: float = 1.0
    omega: float = 1.0
    beta: float | None = None
    r0: float | None = None

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be >= 0")
        if self.eta < 2:
            raise ValueError("eta must be >= 2")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.beta is None and self.r0 is None:
            raise ValueError("one of beta or r0 is required")
        if self.beta is None:
            object.__setattr__(self, "beta", self.r0 ** -self.eta)
        elif self.r0 is None:
            object.__setattr__(self, "r0", self.beta ** (-1.0 / self.eta))
        elif abs(self.beta * self.r0 ** self.eta - 1.0) > 1e-9:
            raise ValueError("beta and r0 are inconsistent: beta * r0^eta != 1")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")


@dataclass(frozen=True)
class DerivedConstants:
    """Constants of the exponential connection form exp(-lambda_c r^kappa)."""

    a: float
    mu_a: float
    nu_a: float
    kappa: float
    base: float  # 2 (K+1) beta
    alpha: float

    def lam(self, c: int) -> float:
        """lambda_c = e^nu(a) (2 (K+1) beta alpha^-c)^(mu(a)/2)."""
        if c < 0:
            raise ValueError("c must be >= 0")
        if self.alpha == 0.0 and c > 0:
            return math.inf
        return math.exp(self.nu_a) * (self.base * self.alpha ** -c) ** (self.mu_a / 2.0)


def derived_constants(params: ChannelParams) -> DerivedConstants:
    a = math.sqrt(2.0 * params.K)
    mu_a = specfun.marcum_mu(a)
    nu_a = specfun.marcum_nu(a)
    return DerivedConstants(
        a=a,
        mu_a=mu_a,
        nu_a=nu_a,
        kappa=mu_a * params.eta / 2.0,
        base=2.0 * (params.K + 1.0) * params.beta,
        alpha=params.alpha,
    )


def rician_pdf(x: float, params: ChannelParams) -> float:
    """Channel power density of the Rician fading channel at gain x >= 0."""
    if x < 0:
        raise ValueError("x must be >= 0")
    K, w = params.K, params.omega
    arg = math.sqrt(4.0 * K * (K + 1.0) * x / w)
    log_pdf = (
        math.log((K + 1.0) / w)
        - K
        - (K + 1.0) * x / w
        + specfun.log_bessel_i(0, arg)
    )
    return math.exp(log_pdf) if log_pdf > -specfun.EXP_OVERFLOW else 0.0


def connection_prob(r, c: int, params: ChannelParams, mode: str = "approx"):
    """Pair connection probability H^(c)(r); scalar or ndarray in r.

    ``approx`` evaluates exp(-lambda_c r^kappa) with the derived
    constants; ``exact`` evaluates the Marcum-Q form directly.
    """
    if c < 0 or c != int(c):
        raise ValueError("c must be a non-negative integer")
    if mode == "approx":
        d = derived_constants(params)
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0):
            raise ValueError("r must be >= 0")
        out = np.exp(-d.lam(int(c)) * r_arr ** d.kappa)
        return out if isinstance(r, np.ndarray) else float(out)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    a = math.sqrt(2.0 * params.K)

    def one(ri):
        if ri < 0:
            raise ValueError("r must be >= 0")
        if ri == 0.0:
            return 1.0
        scale = 2.0 * (params.K + 1.0) * params.beta * params.alpha ** -c
        return specfun.marcum_q1(a, math.sqrt(scale * ri ** params.eta))

    if isinstance(r, np.ndarray):
        return np.array([one(ri) for ri in r.ravel()]).reshape(r.shape)
    return one(float(r))
