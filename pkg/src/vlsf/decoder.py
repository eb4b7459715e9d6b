"""Threshold VLSF decoding driven by the lower bound psi, and Monte Carlo campaigns."""
from __future__ import annotations

import csv
import enum
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .bounds import ReferenceParams, holder_envelope_terms, renyi_penalty_curve
from .channel import MESSAGE, ChannelParams, Codebook, derive_seed, gen_codebook, rng_for, sample_fading, transmit
from .errors import DomainError
from .linalg import InnovationFilter

ENVELOPE_BLOCK = 64


def threshold(m_count: int, epsilon: float) -> float:
    """gamma = log((M - 1) / epsilon), natural log."""
    if m_count < 2:
        raise DomainError("the stopping rule needs at least two messages")
    if not 0 < epsilon <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    return math.log((m_count - 1) / epsilon)


class Outcome(enum.Enum):
    CORRECT = "Correct"
    WRONG_MESSAGE = "WrongMessage"
    AMBIGUOUS = "Ambiguous"
    TRUNCATED = "Truncated"


@dataclass(frozen=True)
class DecoderConfig:
    m_count: int
    epsilon: float
    n_max: int
    channel: ChannelParams
    reference: ReferenceParams
    gamma: float | None = None

    def __post_init__(self):
        if self.n_max < 1:
            raise DomainError("n_max must be positive")
        if self.reference.rho != self.channel.rho:
            raise DomainError("reference parameters are bound to a different rho")
        if self.gamma is None:
            object.__setattr__(self, "gamma", threshold(self.m_count, self.epsilon))

    @property
    def guaranteed(self) -> bool:
        return self.gamma >= threshold(self.m_count, self.epsilon) - 1e-12


@dataclass(frozen=True)
class StoppingRecord:
    tau: int
    decoded: int | None
    outcome: Outcome
    trajectory_peak: float
    seed: int
    message: int
    trajectory: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def is_error(self) -> bool:
        return self.outcome is not Outcome.CORRECT


def first_crossing(symbols: np.ndarray, y: np.ndarray, config: DecoderConfig, track: int | None = None):
    """Run the stopping rule over the rows of ``symbols`` against outputs ``y``.

    Returns ``(tau, crossers, psi_track)``: the stopping time (None when no
    codeword reaches gamma within len(y)), the 0-based indices of the
    codewords at or above gamma at tau, and psi of row ``track`` for
    n = 1..tau. The decision at n reads only y[:n].
    """
    ch, ref = config.channel, config.reference
    n_avail = min(len(y), config.n_max)
    pen = renyi_penalty_curve(n_avail, ref.rho, ref.sigma_h2, ref.r)
    filt = InnovationFilter(ch.rho, ch.sigma_z2, symbols.shape[0])
    env = np.empty(0)
    env_total = 0.0
    psi_track = []
    for k in range(n_avail):
        if k == env.size:
            block = y[k:k + ENVELOPE_BLOCK]
            terms = holder_envelope_terms(block, ref.s, ref.sigma_h2, ch) / ref.s
            env = np.concatenate([env, env_total + np.cumsum(terms)])
            env_total = env[-1]
        psi = filt.step(symbols[:, k], y[k]) - env[k] - pen[k]
        if track is not None:
            psi_track.append(psi[track])
        hit = np.flatnonzero(psi >= config.gamma)
        if hit.size:
            return k + 1, hit, np.array(psi_track)
    return None, np.empty(0, dtype=int), np.array(psi_track)


def decode_trial(codebook: Codebook, message: int, config: DecoderConfig, seed: int,
                 keep_trajectory: bool = False) -> StoppingRecord:
    """Transmit codeword ``message`` (1-based) and decode with the psi stopping rule."""
    if not 1 <= message <= codebook.m_count:
        raise DomainError(f"message must lie in 1..{codebook.m_count}")
    if codebook.m_count != config.m_count:
        raise DomainError("codebook size does not match the decoder configuration")
    if codebook.horizon < config.n_max:
        raise DomainError("codebook horizon is shorter than n_max")
    ch = config.channel
    x = codebook.symbols[message - 1, :config.n_max]
    h = sample_fading(config.n_max, ch.rho, seed)
    y = transmit(x, h, ch.sigma_z2, seed)
    tau, hit, track = first_crossing(codebook.symbols[:, :config.n_max], y, config, track=message - 1)
    peak = float(track.max()) if track.size else -math.inf
    traj = track if keep_trajectory else None
    if tau is None:
        return StoppingRecord(config.n_max, None, Outcome.TRUNCATED, peak, seed, message, traj)
    if hit.size > 1:
        return StoppingRecord(tau, None, Outcome.AMBIGUOUS, peak, seed, message, traj)
    decoded = int(hit[0]) + 1
    outcome = Outcome.CORRECT if decoded == message else Outcome.WRONG_MESSAGE
    return StoppingRecord(tau, decoded, outcome, peak, seed, message, traj)


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class CampaignStats:
    trials: int
    outcomes: dict
    tau_histogram: dict
    mean_tau: float
    error_rate: float
    ci: tuple[float, float]
    truncation_rate: float
    records: tuple = field(default=(), repr=False, compare=False)

    @property
    def errors(self) -> int:
        return self.trials - self.outcomes.get(Outcome.CORRECT.value, 0)

    @property
    def truncations(self) -> int:
        return self.outcomes.get(Outcome.TRUNCATED.value, 0)

    @classmethod
    def from_records(cls, records) -> "CampaignStats":
        n = len(records)
        if n == 0:
            raise DomainError("no trials to aggregate")
        outcomes = Counter(r.outcome.value for r in records)
        hist = dict(sorted(Counter(r.tau for r in records).items()))
        errors = sum(r.is_error for r in records)
        return cls(
            trials=n,
            outcomes={o.value: outcomes.get(o.value, 0) for o in Outcome},
            tau_histogram=hist,
            mean_tau=float(np.mean([r.tau for r in records])),
            error_rate=errors / n,
            ci=clopper_pearson(errors, n),
            truncation_rate=outcomes.get(Outcome.TRUNCATED.value, 0) / n,
            records=tuple(records),
        )

    def write_csv(self, histogram_path, summary_path):
        with open(histogram_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "count"])
            w.writerows(self.tau_histogram.items())
        with open(summary_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trials", "errors", "truncations", "mean_tau", "ci_low", "ci_high"])
            w.writerow([self.trials, self.errors, self.truncations, repr(self.mean_tau),
                        repr(self.ci[0]), repr(self.ci[1])])


def _trial(args):
    config, master_seed, t, keep = args
    seed = derive_seed(master_seed, t)
    book = gen_codebook(config.m_count, config.n_max, config.channel.p0, seed)
    message = int(rng_for(seed, MESSAGE).integers(1, config.m_count + 1))
    return decode_trial(book, message, config, seed, keep_trajectory=keep)


def run_campaign(config: DecoderConfig, trials: int, master_seed: int,
                 workers: int = 1, keep_trajectories: int = 0) -> CampaignStats:
    """Independent trials, each with a fresh random codebook, message, fading and noise.

    Trial t draws everything from ``derive_seed(master_seed, t)``, so the
    result is identical for any ``workers``. The first ``keep_trajectories``
    trials retain psi of the transmitted codeword.
    """
    if trials < 1:
        raise DomainError("trials must be positive")
    jobs = [(config, master_seed, t, t < keep_trajectories) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_trial, jobs, chunksize=max(1, trials // (8 * workers))))
    else:
        records = [_trial(j) for j in jobs]
    return CampaignStats.from_records(records)
