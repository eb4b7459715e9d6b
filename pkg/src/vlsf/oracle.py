"""Brute-force estimators used only to validate the closed forms at small n.

Nothing here is on the decoding path. Sampling is chunked and merged with
streaming sums so memory stays bounded at 10^7 samples.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .bounds import check_feasible
from .channel import ChannelParams, rng_for, sample_fading_paths
from .errors import ConvergenceError, DomainError
from .linalg import LOG_2PI, ar1_logdet, gauss_expectation

MAX_OUTPUT_N = 12
MAX_RENYI_N = 8
CHUNK = 1 << 17


class ReliabilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    sample_count: int
    seed: int
    warning: str | None = None

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.std_error

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["value", "std_error", "samples", "seed"])
            w.writerow([repr(self.value), repr(self.std_error), self.sample_count, self.seed])


class _LogMoments:
    """Streaming log-sum of w and w^2 from log-weights."""

    def __init__(self, top_frac: float = 0.0, total: int = 0):
        self.log_s1 = -np.inf
        self.log_s2 = -np.inf
        self.count = 0
        self._k = math.ceil(top_frac * total) if top_frac else 0
        self._top = np.empty(0)

    def add(self, lw: np.ndarray):
        self.log_s1 = np.logaddexp(self.log_s1, logsumexp(lw))
        self.log_s2 = np.logaddexp(self.log_s2, logsumexp(2.0 * lw))
        self.count += lw.size
        if self._k:
            pool = np.concatenate([self._top, lw])
            if pool.size > self._k:
                pool = np.partition(pool, pool.size - self._k)[-self._k:]
            self._top = pool

    @property
    def log_mean(self) -> float:
        return float(self.log_s1 - math.log(self.count))

    @property
    def rel_se(self) -> float:
        # sd(w) / (mean(w) sqrt(S)), from S * S2 / S1^2 - 1 = var / mean^2
        ratio = math.exp(math.log(self.count) + self.log_s2 - 2.0 * self.log_s1) - 1.0
        return math.sqrt(max(ratio, 0.0) / self.count)

    @property
    def ess(self) -> float:
        return math.exp(2.0 * self.log_s1 - self.log_s2)

    @property
    def top_share(self) -> float:
        return math.exp(logsumexp(self._top) - self.log_s1) if self._top.size else 0.0


def _chunks(total: int):
    done = 0
    while done < total:
        size = min(CHUNK, total - done)
        yield size
        done += size


def _log_phi(y, v):
    return -0.5 * (LOG_2PI + np.log(v) + y * y / v)


def mc_log_output_density(y, channel: ChannelParams, samples: int = 10**6, seed: int = 0) -> McEstimate:
    """Estimate log f_{Y^n}(y^n) by averaging over fading paths drawn from P.

    Gaussian signaling is integrated out per symbol, so each path contributes
    prod_k phi_{sigma_z2 + p0 h_k^2}(y_k). The standard error is the delta
    method on the log of the sample mean.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if y.ndim != 1 or n == 0 or n > MAX_OUTPUT_N:
        raise DomainError(f"output length must be in 1..{MAX_OUTPUT_N}, got {n}")
    if samples < 10**4:
        raise DomainError("mc_log_output_density needs at least 10^4 samples")
    if channel.p0 == 0.0:
        exact = float(np.sum(_log_phi(y, channel.sigma_z2)))
        return McEstimate(exact, 0.0, samples, seed)
    rng = rng_for(seed, 17)
    acc = _LogMoments()
    for size in _chunks(samples):
        h = sample_fading_paths(size, n, channel.rho, rng)
        acc.add(np.sum(_log_phi(y, channel.sigma_z2 + channel.p0 * h * h), axis=1))
    note = None
    if acc.ess < 100:
        note = f"effective sample size {acc.ess:.1f} < 100"
        warnings.warn(note, ReliabilityWarning, stacklevel=2)
    return McEstimate(acc.log_mean, acc.rel_se, samples, seed, note)


def _scalar_marginal(y_k: float, channel: ChannelParams, tol: float) -> float:
    """E_{h ~ N(0,1)}[phi_{sigma_z2 + p0 h^2}(y_k)]; quad picks up where Gauss-Hermite stalls."""
    def f(h):
        return np.exp(_log_phi(y_k, channel.sigma_z2 + channel.p0 * h * h))

    try:
        return gauss_expectation(f, 1.0, tol)
    except ConvergenceError:
        g = lambda h: float(f(h)) * math.exp(-0.5 * h * h) / math.sqrt(2.0 * math.pi)
        pts = sorted({0.1 * math.sqrt(channel.sigma_z2 / channel.p0) * k for k in (1, 3, 10, 30)})
        val = 0.0
        edges = [0.0, *pts, 40.0]
        for a, b in zip(edges[:-1], edges[1:]):
            val += integrate.quad(g, a, b, epsabs=0.0, epsrel=tol, limit=400)[0]
        return 2.0 * val


def iid_exact_info_density(x, y, channel: ChannelParams, tol: float = 1e-10) -> float:
    """Exact information density when the fading is memoryless (rho = 0)."""
    if channel.rho != 0.0:
        raise DomainError("the exact per-symbol route requires rho = 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be vectors of equal length")
    total = 0.0
    for xk, yk in zip(x, y):
        total += float(_log_phi(yk, channel.sigma_z2 + xk * xk))
        total -= math.log(_scalar_marginal(float(yk), channel, tol))
    return total


def _log_p_minus_log_q(h: np.ndarray, rho: float, sigma_h2: float) -> np.ndarray:
    n = h.shape[1]
    innov = h[:, 1:] - rho * h[:, :-1]
    quad_p = h[:, 0] ** 2 + np.sum(innov * innov, axis=1) / (1.0 - rho * rho)
    log_p = -0.5 * (n * LOG_2PI + ar1_logdet(n, rho) + quad_p)
    log_q = -0.5 * (n * math.log(2.0 * math.pi * sigma_h2) + np.sum(h * h, axis=1) / sigma_h2)
    return log_p - log_q


def mc_renyi_moment(n: int, rho: float, sigma_h2: float, r: float,
                    samples: int = 10**6, seed: int = 0) -> McEstimate:
    """Estimate E_Q[L^r] with h drawn from the i.i.d. reference Q."""
    check_feasible(r, sigma_h2, rho)
    if not 1 <= n <= MAX_RENYI_N:
        raise DomainError(f"n must be in 1..{MAX_RENYI_N}")
    rng = rng_for(seed, 23)
    acc = _LogMoments(top_frac=1e-3, total=samples)
    sd = math.sqrt(sigma_h2)
    for size in _chunks(samples):
        h = rng.standard_normal((size, n)) * sd
        acc.add(r * _log_p_minus_log_q(h, rho, sigma_h2))
    note = None
    if acc.top_share > 0.5:
        note = f"top 0.1% of samples carry {acc.top_share:.0%} of the mass"
        warnings.warn(note, ReliabilityWarning, stacklevel=2)
    mean = math.exp(acc.log_mean)
    return McEstimate(mean, mean * acc.rel_se, samples, seed, note)


def mc_kl_divergence(n: int, rho: float, sigma_h2: float,
                     samples: int = 10**7, seed: int = 0) -> McEstimate:
    """Estimate D(P || Q) = E_P[log p - log q] with h drawn from the AR(1) law."""
    if n < 1:
        raise DomainError("n must be positive")
    rng = rng_for(seed, 29)
    s1 = s2 = 0.0
    for size in _chunks(samples):
        h = sample_fading_paths(size, n, rho, rng)
        d = _log_p_minus_log_q(h, rho, sigma_h2)
        s1 += float(d.sum())
        s2 += float(d @ d)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    return McEstimate(mean, math.sqrt(var / samples), samples, seed)
