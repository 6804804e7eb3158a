"""Stochastic integration of the Stratonovich-perturbed system and Monte Carlo tooling.

Paths are driven by per-path Philox streams keyed on (seed, path index), so
any path is reproducible in isolation and ensembles are order-independent.
All paths of an ensemble advance together on (3, n) arrays; the stepping
formulas are elementwise, so a slice of an ensemble is bitwise identical to
the standalone path with the same index.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dde, equilibria
from .errors import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    PositivityError,
)
from .model import SigmaFn, _drift_terms, _sigma_clipped

SCHEME_HEUN = "stratonovich-heun"
SCHEME_EULER = "ito-euler-corrected"
SCHEMES = (SCHEME_HEUN, SCHEME_EULER)


@dataclass(frozen=True)
class PathConfig:
    seed: int
    T: float
    K: int = 64
    scheme: str = SCHEME_HEUN

    def __post_init__(self):
        if self.K < 8:
            raise DomainError("need at least 8 steps per delay interval")
        if self.T <= 0.0:
            raise DomainError("horizon T must be positive")
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")


def path_normals(seed, path_index, n_steps):
    """The (n_steps, 2) Gaussian increments feeding one path, from its own stream."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, path_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal((n_steps, 2))


def heun_step(y, dw, h, f_now, f_at, g):
    """One Stratonovich-Heun step: the same increment drives predictor and corrector."""
    gy = g(y)
    noise = gy * dw
    pred = y + h * f_now + noise
    y_next = y + 0.5 * h * (f_now + f_at(pred)) + 0.5 * (gy + g(pred)) * dw
    return y_next, pred


def ito_euler_step(y, dw, h, f_corrected, g):
    """Euler-Maruyama on the Ito form (drift already carries the Stratonovich correction)."""
    return y + h * f_corrected + g(y) * dw


def simulate_linear(a, eps, x0, h, dw, scheme=SCHEME_HEUN):
    """Drive dx = a*x dt + eps*x o dW with the production stepping kernels.

    Used as the scheme self-check against the exact geometric solution
    x0 * exp(a*t + eps*W(t)).
    """
    f = lambda x: a * x
    g = lambda x: eps * x
    x = float(x0)
    for inc in dw:
        if scheme == SCHEME_HEUN:
            x, _ = heun_step(x, inc, h, f(x), f, g)
        else:
            x = ito_euler_step(x, inc, h, f(x) + 0.5 * eps * eps * x, g)
    return x


class _EnsembleGuard:
    def __init__(self, path_indices):
        self.path_indices = np.asarray(path_indices)
        self.min_component = 0.0
        self.clamp_count = 0
        self.warn_count = 0

    def apply(self, y, t):
        bad = ~np.isfinite(y) | (np.abs(y) > dde.BLOWUP_LIMIT)
        if np.any(bad):
            which = int(self.path_indices[np.nonzero(np.any(bad, axis=0))[0][0]])
            raise DivergenceError(f"path {which} blew up at t={t:g}", t=t)
        low = float(y.min())
        if low < 0.0:
            self.min_component = min(self.min_component, low)
            if low < dde.HARD_NEG:
                loc = np.unravel_index(int(np.argmin(y)), y.shape)
                which = int(self.path_indices[loc[1]])
                raise PositivityError(
                    f"path {which} component {loc[0]} reached {low:g} at t={t:g}", t=t
                )
            dust = (y < 0.0) & (y >= -dde.CLAMP_TOL)
            self.clamp_count += int(dust.sum())
            self.warn_count += int(((y < -dde.CLAMP_TOL)).sum())
            y = np.where(dust, 0.0, y)
        return y


def _simulate_paths(p, hist, cfg, path_indices, sigma=None):
    """Advance the given paths together; returns (times, nodes (n_nodes, 3, n), guard)."""
    if sigma is None:
        sigma = SigmaFn(p.M)
    h = p.tau / cfg.K
    n_steps = max(1, math.ceil(cfg.T / h - 1e-9))
    n_paths = len(path_indices)
    sqrt_h = math.sqrt(h)

    dw = np.stack(
        [path_normals(cfg.seed, idx, n_steps) for idx in path_indices]
    )  # (n, n_steps, 2)
    dw = np.transpose(dw, (1, 2, 0)) * sqrt_h  # (n_steps, 2, n)

    def g(y):
        gs = p.eps * _sigma_clipped(sigma, y[0])
        gq = p.eps * _sigma_clipped(sigma, y[2])
        return np.stack([gs, np.zeros_like(gs), gq])

    def strat_corr(y):
        half = 0.5 * p.eps * p.eps
        yc = np.maximum(y, 0.0)
        cs = half * sigma(yc[0]) * sigma.prime(yc[0])
        cq = half * sigma(yc[2]) * sigma.prime(yc[2])
        return np.stack([cs, np.zeros_like(cs), cq])

    def sigma_ext(x):
        return sigma(np.maximum(x, 0.0))

    def drift_at(y, delayed_sq):
        ds, di, dq = _drift_terms(
            y[0], y[1], y[2], delayed_sq[0], delayed_sq[1], p, sigma_ext
        )
        return np.stack([ds, di, dq])

    guard = _EnsembleGuard(path_indices)
    nodes = np.empty((n_steps + 1, 3, n_paths))
    ones = np.ones(n_paths)
    nodes[0, 0] = hist.s(0.0) * ones
    nodes[0, 1] = hist.i0 * ones
    nodes[0, 2] = hist.q(0.0) * ones

    def delayed_sq(node_index):
        if node_index <= 0:
            td = node_index * h
            return hist.s(td) * ones, hist.q(td) * ones
        return nodes[node_index, 0], nodes[node_index, 2]

    K = cfg.K
    for n in range(n_steps):
        t = n * h
        y = nodes[n]
        d_now = delayed_sq(n - K)
        f_now = drift_at(y, d_now)
        inc = np.stack([dw[n, 0], np.zeros(n_paths), dw[n, 1]])
        if cfg.scheme == SCHEME_HEUN:
            d_next = delayed_sq(n + 1 - K)
            y_next, _ = heun_step(
                y, inc, h, f_now, lambda pred: drift_at(pred, d_next), g
            )
        else:
            y_next = ito_euler_step(y, inc, h, f_now + strat_corr(y), g)
        nodes[n + 1] = guard.apply(y_next, t + h)

    times = h * np.arange(n_steps + 1)
    return times, nodes, guard


def sample_path(p, hist, cfg, path_index=0, sigma=None):
    """One sample path as a dense Trajectory (noise off reproduces the deterministic run)."""
    if sigma is None:
        sigma = SigmaFn(p.M)
    _, nodes, guard = _simulate_paths(p, hist, cfg, [path_index], sigma)
    states = nodes[:, :, 0]
    # node drift values give the Hermite dense output its slopes
    h = p.tau / cfg.K
    derivs = np.empty_like(states)
    for n in range(len(states)):
        td = (n - cfg.K) * h
        if td <= 0.0:
            d_sq = (hist.s(td), hist.q(td))
        else:
            d_sq = (states[n - cfg.K, 0], states[n - cfg.K, 2])
        derivs[n] = _drift_terms(
            states[n, 0], states[n, 1], states[n, 2], d_sq[0], d_sq[1], p,
            lambda x: sigma(np.maximum(x, 0.0)),
        )
    return dde.Trajectory(
        t0=0.0,
        h=h,
        states=states,
        derivs=derivs,
        history=hist,
        clamp_count=guard.clamp_count,
        warn_count=guard.warn_count,
        min_component=guard.min_component,
    )


@dataclass
class EnsembleStats:
    n_paths: int
    times: np.ndarray
    mean: np.ndarray  # (n_nodes, 3)
    dev_p50: np.ndarray  # per-node median of max-component deviation
    dev_p95: np.ndarray
    window: tuple
    sup_devs: np.ndarray  # per-path sup over window of max-component deviation
    threshold: Optional[float] = None
    exceed_count: Optional[int] = None
    min_component: float = 0.0


def _reference_nodes(reference, times):
    if isinstance(reference, dde.Trajectory):
        return np.array([reference.eval(t) for t in times])
    return np.tile(np.asarray(reference, dtype=float), (len(times), 1))


def ensemble(p, hist, cfg, n, reference, window, threshold=None, sigma=None):
    """Run n paths and aggregate deviation statistics against a reference.

    `reference` is either a Trajectory (same step layout) or a fixed point.
    The per-path statistic is the sup over window nodes of the largest
    componentwise deviation.
    """
    if n < 1:
        raise DomainError("need at least one path")
    times, nodes, guard = _simulate_paths(p, hist, cfg, list(range(n)), sigma)
    ref = _reference_nodes(reference, times)  # (n_nodes, 3)
    dev = np.abs(nodes - ref[:, :, None]).max(axis=1)  # (n_nodes, n)

    t_a, t_b = window
    mask = (times >= t_a - 1e-12) & (times <= t_b + 1e-12)
    if not np.any(mask):
        raise ConfigurationError(f"window [{t_a:g}, {t_b:g}] contains no nodes")
    sup_devs = dev[mask].max(axis=0)

    stats = EnsembleStats(
        n_paths=n,
        times=times,
        mean=nodes.mean(axis=2),
        dev_p50=np.percentile(dev, 50.0, axis=1),
        dev_p95=np.percentile(dev, 95.0, axis=1),
        window=(float(t_a), float(t_b)),
        sup_devs=sup_devs,
        min_component=guard.min_component,
    )
    if threshold is not None:
        stats.threshold = float(threshold)
        stats.exceed_count = int(np.count_nonzero(sup_devs >= threshold))
    return stats


def wilson_interval(successes, n, z=1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise DomainError("need n > 0")
    p_hat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    # boundary counts give exactly 0/1 endpoints; the closed form would land
    # one ulp inside and fail to cover the point estimate
    if successes == 0:
        return 0.0, (z2 / n) / denom
    if successes == n:
        return 1.0 / denom, 1.0
    center = (p_hat + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class ConcentrationRow:
    eps: float
    rho: float
    t_lo: float
    t_hi: float
    n: int
    exceed: int
    p_hat: float
    ci_lo: float
    ci_hi: float


@dataclass
class ConcentrationTable:
    rows: list = field(default_factory=list)
    prefactor: float = float("nan")
    eta: float = float("nan")

    def log_prob_slope(self):
        """Slope of ln(p_hat) against 1/eps^2 over rows with nonzero counts.

        Returns None when fewer than two usable rows exist.
        """
        xs, ys = [], []
        for r in self.rows:
            if r.eps > 0.0 and r.exceed > 0:
                xs.append(1.0 / (r.eps * r.eps))
                ys.append(math.log(r.p_hat))
        if len(xs) < 2:
            return None
        slope, _ = np.polyfit(xs, ys, 1)
        return float(slope)


def concentration_experiment(
    p, hist, eps_list, rho, kappa1, kappa2, n, seed,
    K=64, scheme=SCHEME_HEUN, sigma=None,
):
    """Empirical exceedance probabilities around E0 on the predicted time window.

    The window [k1 ln(c/rho)/eta, k2 ln(c/rho)/eta] uses the deterministic
    decay prefactor as c and the spectral eta; seeds are coupled across the
    eps values so the exceedance counts are comparable.
    """
    if not (1.0 < kappa1 < kappa2):
        raise ConfigurationError("need 1 < kappa1 < kappa2")
    if rho <= 0.0:
        raise ConfigurationError("need rho > 0")

    st = equilibria.stability_at_e0(p)
    if st.eta <= 0.0:
        raise ConfigurationError("E0 is not attracting (eta <= 0); no window exists")
    e0 = equilibria.bacteria_free(p)
    t_det = max(50.0, 10.0 / st.eta)
    det = dde.integrate(p.with_eps(0.0), hist, t_det, K, sigma=sigma)
    fit = dde.fit_decay(det, e0, dde.auto_window(det, e0), st.eta)
    c = fit.prefactor
    if rho >= c:
        raise ConfigurationError(
            f"rho={rho:g} >= decay prefactor c={c:g}; the window is empty"
        )
    log_ratio = math.log(c / rho)
    t_lo = kappa1 * log_ratio / st.eta
    t_hi = kappa2 * log_ratio / st.eta

    table = ConcentrationTable(prefactor=c, eta=st.eta)
    for eps in eps_list:
        cfg = PathConfig(seed=seed, T=t_hi, K=K, scheme=scheme)
        stats = ensemble(
            p.with_eps(eps), hist, cfg, n, e0, (t_lo, t_hi),
            threshold=2.0 * rho, sigma=sigma,
        )
        lo, hi = wilson_interval(stats.exceed_count, n)
        table.rows.append(
            ConcentrationRow(
                eps=float(eps), rho=float(rho), t_lo=t_lo, t_hi=t_hi, n=n,
                exceed=stats.exceed_count, p_hat=stats.exceed_count / n,
                ci_lo=lo, ci_hi=hi,
            )
        )
    return table
