"""Validation of the standing assumptions and the derived thresholds.

Every inequality the analysis relies on is checked numerically for a given
parameter/history pair; failures are reported with their raw margins
(LHS - RHS of the inequality written so that "pass" means margin > 0, or
margin >= 0 for the non-strict ones).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .model import SigmaFn

_SCAN_STEP = 1e-4
_FD_STEP = 1e-6


@dataclass(frozen=True)
class RegionBounds:
    """The invariant box R1 x R2 x R3 = [0,s_max] x [0,i_max] x [q_min, q_max]."""

    s_max: float
    i_max: float
    q_min: float
    q_max: float

    def contains(self, state, atol=0.0):
        s, i, q = state[0], state[1], state[2]
        return (
            -atol <= s <= self.s_max + atol
            and -atol <= i <= self.i_max + atol
            and self.q_min - atol <= q <= self.q_max + atol
        )


@dataclass
class CheckEntry:
    id: str
    description: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    informational: bool = False

    def __post_init__(self):
        # numpy scalars sneak in from vectorized checks; keep entries JSON-friendly
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.margin = float(self.margin)
        self.passed = bool(self.passed)


@dataclass
class ValidationReport:
    entries: list = field(default_factory=list)

    @property
    def passed(self):
        return all(e.passed for e in self.entries if not e.informational)

    def entry(self, entry_id):
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def failing_ids(self):
        return [e.id for e in self.entries if not e.informational and not e.passed]

    def to_json(self):
        return json.dumps(
            {
                "passed": self.passed,
                "checks": [
                    {
                        "id": e.id,
                        "description": e.description,
                        "lhs": e.lhs,
                        "rhs": e.rhs,
                        "margin": e.margin,
                        "pass": e.passed,
                        "informational": e.informational,
                    }
                    for e in self.entries
                ],
            },
            indent=2,
        )

    def to_text(self):
        lines = [
            f"{'check':<14} {'pass':<5} {'lhs':>14} {'rhs':>14} {'margin':>14}  description"
        ]
        for e in self.entries:
            flag = "info" if e.informational and e.passed else ("ok" if e.passed else "FAIL")
            lines.append(
                f"{e.id:<14} {flag:<5} {e.lhs:>14.6g} {e.rhs:>14.6g} "
                f"{e.margin:>14.6g}  {e.description}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _burst_rate(p):
    # b * exp(-mu*tau) * mu, the recurring group in the thresholds
    return p.effective_burst * p.mu


def compute_nu(p):
    """Lower boundary of the phage component of the invariant region."""
    if p.m * p.M <= p.d:
        raise PreconditionError(
            "compute_nu requires m*M > d (the dose chain needs d/m < M)"
        )
    br = _burst_rate(p)
    return p.d * br / (p.m * br + p.k2 * (p.m * p.M - p.d))


def minimal_dose(p):
    """Smallest inoculation rate d for which the dose hypothesis holds.

    Solves the dose inequality as an equality in d; the k2 term makes the
    threshold grow with the coinfection adsorption rate.
    """
    br = _burst_rate(p)
    return (p.alpha * p.m / p.k1) * (br + p.k2 * p.M) / (br + (p.alpha / p.k1) * p.k2)


def invariant_region(p):
    """The box of the boundedness result; requires m*M > d."""
    if p.m * p.M <= p.d:
        raise PreconditionError("invariant_region requires m*M > d")
    head = p.m * p.M - p.d
    return RegionBounds(
        s_max=head / (p.k1 * p.effective_burst * p.M),
        i_max=head / (p.effective_burst * p.mu),
        q_min=compute_nu(p),
        q_max=p.M,
    )


def check_sigma(sigma):
    """Dense-grid verification of the truncation-function invariants."""
    m = sigma.m_threshold
    xs = np.arange(0.0, m + 2.0 + _SCAN_STEP, _SCAN_STEP)
    vals = sigma(xs)
    primes = sigma.prime(xs)

    ident = xs[xs <= m]
    identity_err = float(np.max(np.abs(sigma(ident) - ident))) if len(ident) else 0.0
    plateau = xs[xs >= m + 1.0]
    plateau_err = (
        float(np.max(np.abs(sigma(plateau) - (m + 1.0)))) if len(plateau) else 0.0
    )
    mono_margin = float(np.min(np.diff(vals)))
    prime_min = float(np.min(primes))
    prime_max = float(np.max(primes))
    centered = (sigma(xs[2:]) - sigma(xs[:-2])) / (2.0 * _SCAN_STEP)
    fd_err = float(np.max(np.abs(centered - primes[1:-1]) / np.maximum(1.0, np.abs(primes[1:-1]))))

    entries = [
        CheckEntry(
            "sigma-identity",
            "sigma(x) = x on [0, M] and sigma = M+1 past M+1 (max abs error)",
            max(identity_err, plateau_err),
            0.0,
            -max(identity_err, plateau_err),
            identity_err == 0.0 and plateau_err == 0.0,
        ),
        CheckEntry(
            "sigma-monotone",
            "sigma nondecreasing on a dense grid (min forward difference)",
            mono_margin,
            0.0,
            mono_margin,
            mono_margin >= 0.0 and prime_min >= 0.0,
        ),
        CheckEntry(
            "sigma-slope",
            "0 <= sigma' <= 1.9 on [0, M+2], agreeing with finite differences",
            prime_max,
            1.9,
            1.9 - prime_max,
            prime_min >= 0.0 and prime_max <= 1.9 and fd_err <= 1e-6,
        ),
    ]
    return entries


def _simpson(f, a, b, n):
    xs = np.linspace(a, b, n + 1)
    ys = f(xs)
    h = (b - a) / n
    return h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum())


def required_initial_mass(hist, p, sigma):
    """k1*exp(-mu*tau) * integral of sigma(Q0)*S0 over [-tau, 0], by adaptive Simpson."""
    f = lambda t: sigma(hist.q(t)) * hist.s(t)
    n = max(2 * (len(hist.grid) - 1), 8)
    prev = _simpson(f, -p.tau, 0.0, n)
    for _ in range(20):
        n *= 2
        cur = _simpson(f, -p.tau, 0.0, n)
        if abs(cur - prev) <= 1e-10 * max(abs(cur), 1e-30):
            prev = cur
            break
        prev = cur
    return p.k1 * p.attenuation * prev


def check_initial_mass(hist, p, sigma):
    """Initial infected mass must cover the pre-history lysis debt."""
    required = required_initial_mass(hist, p, sigma)
    return CheckEntry(
        "infected-mass",
        "I0 >= k1 e^{-mu tau} int sigma(Q0) S0",
        hist.i0,
        required,
        hist.i0 - required,
        hist.i0 >= required,
    )


def _dense_history(hist, refine=8):
    ts = np.linspace(-hist.tau, 0.0, refine * (len(hist.grid) - 1) + 1)
    return ts, hist.s(ts), hist.q(ts)


def check_delay_hypotheses(hist, p):
    """The four initial-condition clauses, each as a worst-case margin over [-tau, 0]."""
    if p.m * p.M <= p.d:
        raise PreconditionError("delay hypotheses need m*M > d")
    nu = compute_nu(p)
    region = invariant_region(p)
    _, s0, q0 = _dense_history(hist)
    br = _burst_rate(p)

    region_margin = min(
        float(s0.min()),
        float(p.M - s0.max()),
        hist.i0,
        p.M - hist.i0,
        float(q0.min()) - nu,
        float(p.M - q0.max()),
    )
    pressure = (p.m * br + p.k2 * (p.m * p.M - p.d)) * q0 * s0
    dose_pull = p.d * p.mu * hist.s(0.0)
    entries = [
        CheckEntry(
            "init-region",
            "(S0(t), I0, Q0(t)) in R0 = [0,M] x [0,M] x [nu, M]",
            region_margin,
            0.0,
            region_margin,
            region_margin >= 0.0,
        ),
        CheckEntry(
            "phage-pressure",
            "(m b e^{-mu tau} mu + k2(mM-d)) Q0(t) S0(t) > d mu S0(0)",
            float(pressure.min()),
            dose_pull,
            float(pressure.min()) - dose_pull,
            float(pressure.min()) > dose_pull,
        ),
        CheckEntry(
            "burst-viability",
            "b e^{-mu tau} > 1",
            p.effective_burst,
            1.0,
            p.effective_burst - 1.0,
            p.effective_burst > 1.0,
        ),
        CheckEntry(
            "bacteria-cap",
            "S0(t) < (mM-d)/(k1 b e^{-mu tau} M)",
            float(s0.max()),
            region.s_max,
            region.s_max - float(s0.max()),
            float(s0.max()) < region.s_max,
        ),
        CheckEntry(
            "infected-cap",
            "I0 < (mM-d)/(b e^{-mu tau} mu)",
            hist.i0,
            region.i_max,
            region.i_max - hist.i0,
            hist.i0 < region.i_max,
        ),
    ]
    return entries


def check_dose(p):
    """The dose hypothesis: d/m < M and the k2-inflated dose threshold."""
    br = _burst_rate(p)
    threshold = (p.alpha * p.m / p.k1) * (br + p.k2 * (p.M - p.d / p.m)) / br
    entries = [
        CheckEntry(
            "dose-capacity",
            "d/m < M",
            p.d / p.m,
            p.M,
            p.M - p.d / p.m,
            p.d / p.m < p.M,
        ),
        CheckEntry(
            "dose-threshold",
            "d > (alpha m / k1)(b e^{-mu tau} mu + k2(M - d/m))/(b e^{-mu tau} mu)",
            p.d,
            threshold,
            p.d - threshold,
            p.d > threshold,
        ),
    ]
    # Derived chain alpha/k1 < nu < d/m < M; reported, not a hypothesis itself.
    if p.m * p.M > p.d:
        nu = compute_nu(p)
        chain = min(nu - p.alpha / p.k1, p.d / p.m - nu, p.M - p.d / p.m)
        entries.append(
            CheckEntry(
                "dose-chain",
                "derived chain alpha/k1 < nu < d/m < M",
                chain,
                0.0,
                chain,
                chain > 0.0,
                informational=True,
            )
        )
    return entries


def validate(p, hist, sigma=None):
    """Full report over every standing assumption for one parameter/history pair."""
    if sigma is None:
        sigma = SigmaFn(p.M)
    report = ValidationReport()
    report.entries.extend(check_sigma(sigma))
    report.entries.append(check_initial_mass(hist, p, sigma))
    if p.m * p.M > p.d:
        report.entries.extend(check_delay_hypotheses(hist, p))
    else:
        report.entries.append(
            CheckEntry(
                "init-clauses",
                "delay hypotheses unevaluable: m*M <= d breaks the region definition",
                p.m * p.M,
                p.d,
                p.m * p.M - p.d,
                False,
            )
        )
    report.entries.extend(check_dose(p))
    return report
