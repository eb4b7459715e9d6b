"""Gauss-Markov fading, Gaussian random codebooks and the fading channel itself."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError

# stream tags for derived generators
FADING, NOISE, CODEBOOK, MESSAGE = range(4)


def derive_seed(master_seed: int, *path: int) -> int:
    """Deterministic 64-bit child seed for ``(master_seed, *path)``."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), *[int(p) for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), *path])))


@dataclass(frozen=True)
class ChannelParams:
    rho: float = 0.3
    sigma_z2: float = 1.0
    p0: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}")
        if not (self.sigma_z2 > 0 and math.isfinite(self.sigma_z2)):
            raise DomainError(f"sigma_z2 must be positive and finite, got {self.sigma_z2}")
        if not (self.p0 >= 0 and math.isfinite(self.p0)):
            raise DomainError(f"p0 must be nonnegative and finite, got {self.p0}")

    @property
    def snr(self) -> float:
        return self.p0 / self.sigma_z2

    @classmethod
    def from_snr(cls, snr: float, rho: float = 0.3, sigma_z2: float = 1.0) -> "ChannelParams":
        return cls(rho=rho, sigma_z2=sigma_z2, p0=snr * sigma_z2)


@dataclass(frozen=True)
class Codebook:
    m_count: int
    horizon: int
    p0: float
    seed: int
    symbols: np.ndarray = field(repr=False, compare=False)

    def prefix(self, m: int, n: int) -> np.ndarray:
        """Codeword prefix x_m^n for a 1-based message index."""
        return self.symbols[m - 1, :n]


@dataclass(frozen=True)
class Trace:
    x: np.ndarray
    h: np.ndarray
    y: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if not (len(self.x) == len(self.h) == len(self.y)):
            raise DomainError("trace components must have equal length")

    def __len__(self):
        return len(self.y)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "x", "h", "y"])
            for k, (a, b, c) in enumerate(zip(self.x, self.h, self.y), start=1):
                w.writerow([k, repr(float(a)), repr(float(b)), repr(float(c))])


def sample_fading(n: int, rho: float, seed: int) -> np.ndarray:
    """Stationary AR(1) fading path (h_1..h_n) with unit marginal variance.

    rho = 1 is accepted here (a constant path); the bounds reject it.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    rng = rng_for(seed, FADING)
    w = rng.standard_normal(n + 1)
    drive = math.sqrt(1.0 - rho * rho)
    h, _ = lfilter([drive], [1.0, -rho], w[1:], zi=[rho * w[0]])
    return h


def sample_fading_paths(count: int, n: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent stationary paths as a (count, n) array."""
    w = rng.standard_normal((count, n))
    h = np.empty((count, n))
    h[:, 0] = w[:, 0]
    drive = math.sqrt(1.0 - rho * rho)
    for k in range(1, n):
        h[:, k] = rho * h[:, k - 1] + drive * w[:, k]
    return h


def transmit(x, h, sigma_z2: float, seed: int, noiseless: bool = False) -> np.ndarray:
    """y_k = h_k x_k + z_k with z_k i.i.d. N(0, sigma_z2).

    ``noiseless`` zeroes the noise; it exists for tests of the signal path.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    if x.shape != h.shape:
        raise DomainError(f"length mismatch: x has {x.shape}, h has {h.shape}")
    if not sigma_z2 > 0:
        raise DomainError("sigma_z2 must be positive")
    if noiseless:
        return h * x
    z = rng_for(seed, NOISE).standard_normal(x.shape) * math.sqrt(sigma_z2)
    return h * x + z


def gen_codebook(m_count: int, horizon: int, p0: float, seed: int) -> Codebook:
    if m_count < 1 or horizon < 1:
        raise DomainError("m_count and horizon must be positive")
    if p0 < 0:
        raise DomainError("p0 must be nonnegative")
    sym = rng_for(seed, CODEBOOK).standard_normal((m_count, horizon)) * math.sqrt(p0)
    sym.flags.writeable = False
    return Codebook(m_count=m_count, horizon=horizon, p0=float(p0), seed=int(seed), symbols=sym)


def simulate_trace(x, channel: ChannelParams, seed: int) -> Trace:
    """Send a given input sequence through a fresh fading and noise draw."""
    x = np.asarray(x, dtype=float)
    h = sample_fading(x.size, channel.rho, seed)
    y = transmit(x, h, channel.sigma_z2, seed)
    return Trace(x=x, h=h, y=y, seed=seed)


def random_trace(n: int, channel: ChannelParams, seed: int) -> Trace:
    """A trace whose input is one Gaussian codeword drawn from ``seed``."""
    x = rng_for(seed, CODEBOOK).standard_normal(n) * math.sqrt(channel.p0)
    return simulate_trace(x, channel, seed)
