"""Core model: parameter record, truncated identity, and the system right-hand sides.

State layout is (S, I, Q): uninfected bacteria, infected bacteria, phages.
All right-hand sides work elementwise, so they accept plain floats as well
as numpy arrays (used by the vectorized Monte Carlo engine).
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

S, I, Q = 0, 1, 2

_POSITIVE = ("alpha", "k1", "d", "m", "b", "mu", "tau", "M")


@dataclass(frozen=True)
class Parameters:
    """All model constants in one validated record.

    alpha : bacterial net reproduction rate (1/time)
    k1    : adsorption rate onto uninfected bacteria (1/(conc*time))
    k2    : adsorption rate onto infected bacteria (1/(conc*time))
    d     : phage inoculation rate (conc/time)
    m     : phage death rate (1/time)
    b     : burst size (count)
    mu    : bacterial death rate (1/time)
    tau   : latency delay (time)
    M     : truncation threshold (conc)
    eps   : noise amplitude, 0 for the deterministic system
    """

    alpha: float
    k1: float
    k2: float
    d: float
    m: float
    b: float
    mu: float
    tau: float
    M: float
    eps: float = 0.0

    def __post_init__(self):
        for name in _POSITIVE + ("k2", "eps"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"parameter {name} must be finite, got {value!r}")
        for name in _POSITIVE:
            if getattr(self, name) <= 0.0:
                raise DomainError(f"parameter {name} must be strictly positive")
        if self.k2 < 0.0:
            raise DomainError("parameter k2 must be nonnegative")
        if self.eps < 0.0:
            raise DomainError("parameter eps must be nonnegative")

    @property
    def attenuation(self):
        """exp(-mu*tau): survival factor of an infected cell over the latency."""
        return math.exp(-self.mu * self.tau)

    @property
    def effective_burst(self):
        """b*exp(-mu*tau): phages released per infection that survives the latency."""
        return self.b * self.attenuation

    def with_eps(self, eps):
        return replace(self, eps=eps)

    def with_k2(self, k2):
        return replace(self, k2=k2)


# Default bridge on [M, M+1] (in the local variable u = x - M):
#   sigma(M+u) = M + a1*u + a3*u^3 + a4*u^4 + a5*u^5
# chosen as the quintic Hermite interpolant with value/slope/curvature
# (M, 1, 0) at u=0 and (M+1, 0, 0) at u=1.  C^2 rather than the C-infinity
# the theory assumes; ample smoothness for the numerics here.
DEFAULT_BRIDGE = (1.0, 4.0, -7.0, 3.0)


class SigmaFn:
    """Smooth truncated identity: x below the threshold, constant M+1 past M+1.

    The bridge on (M, M+1) is a quintic in u = x - M with coefficients
    (a1, a3, a4, a5); the quadratic term is always zero so curvature
    vanishes at the left joint.
    """

    def __init__(self, m_threshold, bridge=DEFAULT_BRIDGE):
        if not (math.isfinite(m_threshold) and m_threshold > 0):
            raise DomainError("truncation threshold M must be positive and finite")
        self.m_threshold = float(m_threshold)
        self.bridge = tuple(float(c) for c in bridge)

    def __call__(self, x):
        m = self.m_threshold
        a1, a3, a4, a5 = self.bridge
        if np.isscalar(x):
            if x < 0.0:
                raise DomainError(f"sigma is only defined for x >= 0, got {x!r}")
            if x <= m:
                return x
            if x >= m + 1.0:
                return m + 1.0
            u = x - m
            return m + u * (a1 + u * u * (a3 + u * (a4 + a5 * u)))
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0):
            raise DomainError("sigma is only defined for x >= 0")
        u = np.clip(x - m, 0.0, 1.0)
        bridge = m + u * (a1 + u * u * (a3 + u * (a4 + a5 * u)))
        return np.where(x <= m, x, np.where(x >= m + 1.0, m + 1.0, bridge))

    def prime(self, x):
        m = self.m_threshold
        a1, a3, a4, a5 = self.bridge
        if np.isscalar(x):
            if x < 0.0:
                raise DomainError(f"sigma' is only defined for x >= 0, got {x!r}")
            if x <= m:
                return 1.0
            if x >= m + 1.0:
                return 0.0
            u = x - m
            return a1 + u * u * (3.0 * a3 + u * (4.0 * a4 + 5.0 * a5 * u))
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0):
            raise DomainError("sigma' is only defined for x >= 0")
        u = np.clip(x - m, 0.0, 1.0)
        slope = a1 + u * u * (3.0 * a3 + u * (4.0 * a4 + 5.0 * a5 * u))
        return np.where(x <= m, 1.0, np.where(x >= m + 1.0, 0.0, slope))


def eval_sigma(x, sigma):
    """Value of the truncated identity (domain-checked)."""
    return sigma(x)


def eval_sigma_prime(x, sigma):
    """Derivative of the truncated identity (domain-checked)."""
    return sigma.prime(x)


def _sigma_clipped(sigma, x):
    # The stochastic engine may probe slightly negative predictor states;
    # sigma extends by 0 there (matching sigma(0)=0 continuously).
    return sigma(np.maximum(x, 0.0))


def _drift_terms(s, i, q, s_tau, q_tau, p, sigma):
    """Elementwise right-hand side of the coinfection system; returns (dS, dI, dQ)."""
    sq = sigma(q)
    lysis_influx = p.k1 * p.attenuation * sigma(q_tau) * s_tau
    adsorbed = p.k1 * sq * s
    ds = (p.alpha - p.k1 * sq) * s
    di = adsorbed - p.mu * i - lysis_influx
    dq = p.d - p.m * q - adsorbed - p.k2 * sq * i + p.b * lysis_influx
    return ds, di, dq


def _drift_terms_sq(s, q, s_tau, q_tau, p, sigma):
    """Elementwise right-hand side of the two-component (no coinfection) system."""
    sq = sigma(q)
    ds = (p.alpha - p.k1 * sq) * s
    dq = (
        p.d
        - p.m * q
        - p.k1 * sq * s
        + p.k1 * p.effective_burst * sigma(q_tau) * s_tau
    )
    return ds, dq


def _require_finite(values, what):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} must be finite, got {values!r}")
    return arr


def drift(now, delayed, p, sigma):
    """Deterministic rates (dS, dI, dQ)/dt of the coinfection system.

    `now` and `delayed` are (S, I, Q) triples; only the S and Q components
    of `delayed` enter the equations.
    """
    now = _require_finite(now, "current state")
    delayed = _require_finite(delayed, "delayed state")
    ds, di, dq = _drift_terms(now[S], now[I], now[Q], delayed[S], delayed[Q], p, sigma)
    return np.array([ds, di, dq])


def drift_no_coinfection(now, delayed, p, sigma):
    """Deterministic rates (dS, dQ)/dt of the two-component system."""
    now = _require_finite(now, "current state")
    delayed = _require_finite(delayed, "delayed state")
    ds, dq = _drift_terms_sq(now[0], now[1], delayed[0], delayed[1], p, sigma)
    return np.array([ds, dq])


def diffusion(now, p, sigma):
    """Noise amplitudes (eps*sigma(S), 0, eps*sigma(Q)); I carries no noise."""
    now = _require_finite(now, "state")
    gs = p.eps * sigma(now[S])
    gq = p.eps * sigma(now[Q])
    return np.array([gs, np.zeros_like(gs), gq])


def stratonovich_correction(now, p, sigma):
    """Drift added when the Stratonovich system is rewritten in Ito form."""
    now = _require_finite(now, "state")
    half_eps2 = 0.5 * p.eps * p.eps
    cs = half_eps2 * sigma(now[S]) * sigma.prime(now[S])
    cq = half_eps2 * sigma(now[Q]) * sigma.prime(now[Q])
    return np.array([cs, np.zeros_like(cs), cq])
