"""Computable lower and upper bounds on the information density.

The lower bound replaces the correlated fading law P = N(0, Sigma) by an
i.i.d. reference Q = N(0, sigma_h2 I) through Hoelder's inequality with
exponents (r, s). It pays a deterministic Renyi penalty and a per-symbol
envelope. The upper bound uses Jensen's inequality under the same
reference and pays the KL divergence instead.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .channel import ChannelParams
from .errors import DomainError, FeasibilityError
from .linalg import LOG_2PI, ar1_eigenvalues, ar1_logdet, log_gauss_expectation, seq_gaussian_logpdf

QUAD_TOL = 1e-10


def feasibility_floor(r: float, rho: float) -> float:
    """Smallest admissible reference variance, ((r-1)/r)(1+rho)/(1-rho)."""
    return (r - 1.0) / r * (1.0 + rho) / (1.0 - rho)


def check_feasible(r: float, sigma_h2: float, rho: float) -> None:
    if not r > 1:
        raise DomainError(f"Hoelder order r must exceed 1, got {r}")
    if not sigma_h2 > 0:
        raise DomainError(f"sigma_h2 must be positive, got {sigma_h2}")
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    floor = feasibility_floor(r, rho)
    if not sigma_h2 > floor:
        raise FeasibilityError(
            f"infeasible reference: need sigma_h2 > ((r-1)/r)*(1+rho)/(1-rho), "
            f"i.e. {sigma_h2:g} > {floor:.6g} (r={r:g}, rho={rho:g})"
        )


@dataclass(frozen=True)
class ReferenceParams:
    """Hoelder order r, its conjugate s and the reference fading variance.

    Bound to a correlation ``rho`` at construction, which is where
    feasibility is checked.
    """

    r: float
    sigma_h2: float
    rho: float
    s: float = float("nan")

    def __post_init__(self):
        check_feasible(self.r, self.sigma_h2, self.rho)
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "sigma_h2", float(self.sigma_h2))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "s", self.r / (self.r - 1.0))

    def rebind(self, rho: float) -> "ReferenceParams":
        return ReferenceParams(self.r, self.sigma_h2, rho)


@dataclass(frozen=True)
class BoundTrajectory:
    log_cond: np.ndarray
    envelope: np.ndarray
    penalty: np.ndarray
    value: np.ndarray
    kind: str

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(1, self.value.size + 1)

    def __len__(self):
        return self.value.size

    def rows(self):
        for n, a, b, c, d in zip(self.n_values, self.log_cond, self.envelope, self.penalty, self.value):
            yield [int(n), repr(float(a)), repr(float(b)), repr(float(c)), repr(float(d)), self.kind]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "log_cond", "envelope", "penalty", "value", "kind"])
            w.writerows(self.rows())


# --- change-of-measure penalties -------------------------------------------

@lru_cache(maxsize=65536)
def _renyi_log_moment(n: int, rho: float, sigma_h2: float, r: float) -> float:
    lam = ar1_eigenvalues(n, rho)
    ratio = sigma_h2 / lam
    arg = r * ratio - (r - 1.0)
    if np.any(arg <= 0):
        raise FeasibilityError(
            f"r*sigma_h2/lambda - (r-1) <= 0 for some eigenvalue (n={n}, rho={rho}, "
            f"sigma_h2={sigma_h2}, r={r})"
        )
    return float(np.sum(0.5 * r * np.log(ratio) - 0.5 * np.log(arg)))


def renyi_log_moment(n: int, rho: float, sigma_h2: float, r: float) -> float:
    """log E_Q[L^r] where L = dP/dQ, P = N(0, Sigma_n), Q = N(0, sigma_h2 I)."""
    check_feasible(r, sigma_h2, rho)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return _renyi_log_moment(int(n), float(rho), float(sigma_h2), float(r))


def renyi_penalty(n: int, rho: float, sigma_h2: float, r: float) -> float:
    """((r-1)/r) D_r(P || Q), i.e. the log moment divided by r."""
    return renyi_log_moment(n, rho, sigma_h2, r) / r


@lru_cache(maxsize=256)
def _renyi_penalty_curve(n_max: int, rho: float, sigma_h2: float, r: float) -> np.ndarray:
    out = np.array([_renyi_log_moment(n, rho, sigma_h2, r) / r for n in range(1, n_max + 1)])
    out.flags.writeable = False
    return out


def renyi_penalty_curve(n_max: int, rho: float, sigma_h2: float, r: float) -> np.ndarray:
    """Penalties for n = 1..n_max (read-only, shared between callers)."""
    check_feasible(r, sigma_h2, rho)
    return _renyi_penalty_curve(int(n_max), float(rho), float(sigma_h2), float(r))


def renyi_log_moment_det(n: int, rho: float, sigma_h2: float, r: float) -> float:
    """Same moment via determinants of the tridiagonal matrix r sigma_h2 inv(Sigma) - (r-1) I.

    An O(n) continuant recurrence, kept as an independent cross-check of the
    eigenvalue route.
    """
    check_feasible(r, sigma_h2, rho)
    c = 1.0 / (1.0 - rho * rho)
    if n == 1:
        edge = inner = r * sigma_h2 - (r - 1.0)
    else:
        edge = r * sigma_h2 * c - (r - 1.0)
        inner = r * sigma_h2 * (1.0 + rho * rho) * c - (r - 1.0)
    off2 = (r * sigma_h2 * rho * c) ** 2
    # ratios q_k = D_k / D_{k-1} of leading minors keep the recursion in range
    logdet = math.log(edge)
    q = edge
    for k in range(2, n + 1):
        d = edge if k == n else inner
        q = d - off2 / q
        if q <= 0:
            raise FeasibilityError("tridiagonal matrix is not positive definite")
        logdet += math.log(q)
    log_sigma_det = ar1_logdet(n, rho)
    # det(I + r s2 (inv(Sigma) - I/s2)) = det(r s2 inv(Sigma) - (r-1) I)
    return 0.5 * r * (n * math.log(sigma_h2) - log_sigma_det) - 0.5 * logdet


def kl_penalty(n: int, rho: float, sigma_h2: float) -> float:
    """D(N(0, Sigma_n) || N(0, sigma_h2 I)); uses tr(Sigma_n) = n."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not sigma_h2 > 0:
        raise DomainError("sigma_h2 must be positive")
    return 0.5 * (n / sigma_h2 - n + n * math.log(sigma_h2) - ar1_logdet(n, rho))


def kl_penalty_curve(n_max: int, rho: float, sigma_h2: float) -> np.ndarray:
    n = np.arange(1, n_max + 1)
    if not sigma_h2 > 0:
        raise DomainError("sigma_h2 must be positive")
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    return 0.5 * (n / sigma_h2 - n + n * math.log(sigma_h2) - (n - 1) * math.log1p(-rho * rho))


# --- per-symbol limit -------------------------------------------------------

def spectral_density(omega, rho: float):
    return (1.0 - rho * rho) / (1.0 + rho * rho - 2.0 * rho * np.cos(omega))


def _per_eigen(lam, sigma_h2, r):
    return 0.5 * r * np.log(sigma_h2 / lam) - 0.5 * np.log(r * sigma_h2 / lam - (r - 1.0))


def szego_rate(rho: float, sigma_h2: float, r: float) -> float:
    """lim (1/n) log E_Q[L^r], the spectral average of the per-eigenvalue term."""
    check_feasible(r, sigma_h2, rho)
    if rho == 0.0:
        return float(_per_eigen(1.0, sigma_h2, r))
    val, _ = integrate.quad(
        lambda w: _per_eigen(spectral_density(w, rho), sigma_h2, r),
        0.0, math.pi, epsabs=1e-12, epsrel=1e-10, limit=200,
    )
    return val / math.pi


def szego_rate_printed(rho: float, sigma_h2: float, r: float) -> float:
    """The alternative integrand 0.5 log(r s2 S / (r s2 - (r-1) S)), for comparison only.

    It does not vanish at rho = 0, sigma_h2 = 1 although the moment is 1 there.
    """
    check_feasible(r, sigma_h2, rho)

    def g(w):
        S = spectral_density(w, rho)
        return 0.5 * np.log(r * sigma_h2 * S / (r * sigma_h2 - (r - 1.0) * S))

    val, _ = integrate.quad(g, 0.0, math.pi, epsabs=1e-12, epsrel=1e-10, limit=200)
    return val / math.pi


# --- envelopes --------------------------------------------------------------

def _log_phi(y, v):
    return -0.5 * (LOG_2PI + np.log(v) + y * y / v)


def log_power_coeff(s: float, v):
    """log c_{s,v}, where phi_v(y)^s = c_{s,v} phi_{v/s}(y) and c_{s,v} = (s (2 pi v)^(s-1))^(-1/2)."""
    return -0.5 * (math.log(s) + (s - 1.0) * (LOG_2PI + np.log(v)))


def _node_extent(y, sigma_h2, channel):
    # reach past the peak of phi_v(y) in h as well as the Gaussian bulk
    ymax = float(np.max(np.abs(y))) if np.size(y) else 0.0
    return 14.0 * math.sqrt(sigma_h2) + 2.0 * ymax / math.sqrt(channel.p0)


def holder_envelope_terms(y, s: float, sigma_h2: float, channel: ChannelParams, tol: float = QUAD_TOL):
    """log E_{h ~ N(0, sigma_h2)}[phi_{v(h)}(y_k)^s] for each y_k, v(h) = sigma_z2 + p0 h^2."""
    y = np.asarray(y, dtype=float)
    if channel.p0 == 0.0:
        return log_power_coeff(s, channel.sigma_z2) + _log_phi(y, channel.sigma_z2 / s)
    scale = math.sqrt(channel.sigma_z2 / channel.p0)
    yy = y[..., None]

    def logf(h):
        return s * _log_phi(yy, channel.sigma_z2 + channel.p0 * h * h)

    return log_gauss_expectation(logf, sigma_h2, scale, tol=tol, h_max=_node_extent(y, sigma_h2, channel))


def holder_envelope_log(y, params: ReferenceParams, channel: ChannelParams) -> np.ndarray:
    """Per-prefix log E_Q[f(y^n | H^n)^s]; cumulative over symbols."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise DomainError("y must be a non-empty vector")
    _bound_to(params, channel)
    return np.cumsum(holder_envelope_terms(y, params.s, params.sigma_h2, channel))


@lru_cache(maxsize=1024)
def _jensen_moments(sigma_h2: float, sigma_z2: float, p0: float) -> tuple[float, float]:
    """E[log(2 pi v)] and E[1/v] under h ~ N(0, sigma_h2)."""
    scale = math.sqrt(sigma_z2 / p0)
    ext = 14.0 * math.sqrt(sigma_h2)
    # both integrands are positive after shifting log v by log sigma_z2
    log_excess = log_gauss_expectation(
        lambda h: np.log(np.log1p(p0 * h * h / sigma_z2) + 1e-300), sigma_h2, scale, h_max=ext
    )
    log_inv = log_gauss_expectation(
        lambda h: -np.log(sigma_z2 + p0 * h * h), sigma_h2, scale, h_max=ext
    )
    return LOG_2PI + math.log(sigma_z2) + math.exp(float(log_excess)), math.exp(float(log_inv))


def jensen_envelope_terms(y, sigma_h2: float, channel: ChannelParams):
    """E_{h ~ N(0, sigma_h2)}[log phi_{v(h)}(y_k)] for each y_k."""
    y = np.asarray(y, dtype=float)
    if not sigma_h2 > 0:
        raise DomainError("sigma_h2 must be positive")
    if channel.p0 == 0.0:
        return _log_phi(y, channel.sigma_z2)
    e_log, e_inv = _jensen_moments(float(sigma_h2), channel.sigma_z2, channel.p0)
    return -0.5 * e_log - 0.5 * y * y * e_inv


def jensen_envelope_log(y, sigma_h2: float, channel: ChannelParams) -> np.ndarray:
    """Per-prefix E_Q[log f(y^n | H^n)]."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise DomainError("y must be a non-empty vector")
    return np.cumsum(jensen_envelope_terms(y, sigma_h2, channel))


# --- trajectories -----------------------------------------------------------

def _bound_to(params: ReferenceParams, channel: ChannelParams):
    if params.rho != channel.rho:
        raise DomainError(f"reference params are bound to rho={params.rho}, channel has rho={channel.rho}")


def _log_cond(x, y, channel):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DomainError("x and y must have equal length")
    return seq_gaussian_logpdf(x, y, channel.rho, channel.sigma_z2)


def lower_bound_trajectory(x, y, params: ReferenceParams, channel: ChannelParams,
                           log_cond=None) -> BoundTrajectory:
    """psi(x^n, y^n) for n = 1..N.

    ``log_cond`` may be supplied when the sequential density is already known.
    """
    _bound_to(params, channel)
    if log_cond is None:
        log_cond = _log_cond(x, y, channel)
    env = holder_envelope_log(y, params, channel) / params.s
    pen = np.array(renyi_penalty_curve(len(log_cond), params.rho, params.sigma_h2, params.r))
    return BoundTrajectory(log_cond, env, pen, log_cond - env - pen, "lower")


def upper_bound_trajectory(x, y, sigma_h2: float, channel: ChannelParams,
                           log_cond=None) -> BoundTrajectory:
    """phi(x^n, y^n) for n = 1..N."""
    if log_cond is None:
        log_cond = _log_cond(x, y, channel)
    env = jensen_envelope_log(y, sigma_h2, channel)
    pen = kl_penalty_curve(len(log_cond), channel.rho, sigma_h2)
    return BoundTrajectory(log_cond, env, pen, log_cond + pen - env, "upper")
