"""Exhaustive search over the free parameters (r, sigma_h2) of the lower bound."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    ReferenceParams,
    feasibility_floor,
    holder_envelope_terms,
    jensen_envelope_terms,
    kl_penalty,
    renyi_penalty,
)
from .channel import ChannelParams, derive_seed, random_trace
from .decoder import DecoderConfig, run_campaign
from .errors import DomainError, FeasibilityError
from .linalg import seq_gaussian_logpdf


class Objective(enum.Enum):
    MEAN_BOUND_AT_N = "MeanBoundAtN"
    MEAN_CROSSING_TIME = "MeanCrossingTime"


@dataclass(frozen=True)
class TuneGrid:
    r_values: tuple
    sigma_h2_values: tuple
    objective: Objective = Objective.MEAN_BOUND_AT_N
    n_eval: int = 50
    trace_count: int = 200
    master_seed: int = 0
    # campaign settings, used by MEAN_CROSSING_TIME only
    m_count: int = 16
    epsilon: float = 0.05
    n_max: int = 400
    campaign_trials: int = 50

    def __post_init__(self):
        r = tuple(float(v) for v in self.r_values)
        s2 = tuple(float(v) for v in self.sigma_h2_values)
        if not r or not s2:
            raise DomainError("grid must be nonempty")
        if any(v <= 1 for v in r) or list(r) != sorted(r):
            raise DomainError("r_values must be ascending and > 1")
        if any(v <= 0 for v in s2) or list(s2) != sorted(s2):
            raise DomainError("sigma_h2_values must be ascending and positive")
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "sigma_h2_values", s2)
        object.__setattr__(self, "objective", Objective(self.objective))

    @classmethod
    def default(cls, rho: float, r_count: int = 12, s2_count: int = 16, **kw) -> "TuneGrid":
        """r log-spaced on [1.1, 8]; sigma_h2 linear from 1.05x the smallest floor to 4x the largest."""
        r = np.geomspace(1.1, 8.0, r_count)
        lo = 1.05 * feasibility_floor(r[0], rho)
        hi = 4.0 * feasibility_floor(r[-1], rho)
        return cls(tuple(r), tuple(np.linspace(lo, hi, s2_count)), **kw)


@dataclass(frozen=True)
class GridPoint:
    r: float
    sigma_h2: float
    feasible: bool
    score: float
    mean_psi: float
    mean_phi: float
    penalty: float = float("nan")


@dataclass(frozen=True)
class TuneResult:
    table: tuple
    objective: Objective
    trace_seeds: tuple = field(repr=False, default=())

    @property
    def ranked(self) -> list:
        pts = [p for p in self.table if p.feasible]
        return sorted(pts, key=lambda p: -p.score)

    @property
    def best(self) -> GridPoint:
        return self.ranked[0]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "sigma_h2", "feasible", "score", "mean_psi", "mean_phi"])
            for p in self.table:
                nums = [repr(float(v)) for v in (p.score, p.mean_psi, p.mean_phi)]
                w.writerow([repr(float(p.r)), repr(float(p.sigma_h2)), int(p.feasible), *nums])


def bound_traces(channel: ChannelParams, n: int, count: int, master_seed: int):
    """The common-random-number traces scored at every grid point."""
    return [random_trace(n, channel, derive_seed(master_seed, t)) for t in range(count)]


def mean_bounds_at_n(traces, r: float, sigma_h2: float, channel: ChannelParams, log_cond=None):
    """Trace averages of psi and phi at the final index, plus the Renyi penalty."""
    n = len(traces[0])
    if log_cond is None:
        log_cond = np.array([seq_gaussian_logpdf(t.x, t.y, channel.rho, channel.sigma_z2)[-1] for t in traces])
    Y = np.stack([t.y for t in traces])
    ref = ReferenceParams(r, sigma_h2, channel.rho)
    env = holder_envelope_terms(Y, ref.s, sigma_h2, channel).sum(axis=1) / ref.s
    pen = renyi_penalty(n, channel.rho, sigma_h2, r)
    jen = jensen_envelope_terms(Y, sigma_h2, channel).sum(axis=1)
    psi = log_cond - env - pen
    phi = log_cond + kl_penalty(n, channel.rho, sigma_h2) - jen
    return float(psi.mean()), float(phi.mean()), pen


def grid_search(grid: TuneGrid, channel: ChannelParams) -> TuneResult:
    """Score every feasible (r, sigma_h2) on the same traces; infeasible pairs are kept, unscored."""
    traces = bound_traces(channel, grid.n_eval, grid.trace_count, grid.master_seed)
    log_cond = np.array([seq_gaussian_logpdf(t.x, t.y, channel.rho, channel.sigma_z2)[-1] for t in traces])
    table = []
    for r in grid.r_values:
        floor = feasibility_floor(r, channel.rho)
        for s2 in grid.sigma_h2_values:
            if not s2 > floor:
                table.append(GridPoint(r, s2, False, float("nan"), float("nan"), float("nan")))
                continue
            mpsi, mphi, pen = mean_bounds_at_n(traces, r, s2, channel, log_cond)
            if grid.objective is Objective.MEAN_BOUND_AT_N:
                score = mpsi
            else:
                cfg = DecoderConfig(grid.m_count, grid.epsilon, grid.n_max, channel,
                                    ReferenceParams(r, s2, channel.rho))
                score = -run_campaign(cfg, grid.campaign_trials, grid.master_seed).mean_tau
            table.append(GridPoint(r, s2, True, score, mpsi, mphi, pen))
    if not any(p.feasible for p in table):
        r_min = grid.r_values[0]
        need = feasibility_floor(r_min, channel.rho)
        raise FeasibilityError(
            f"no feasible grid point: the loosest constraint (r={r_min:g}) needs "
            f"sigma_h2 > {need:.6g}, largest grid value is {grid.sigma_h2_values[-1]:g}"
        )
    return TuneResult(tuple(table), grid.objective, tuple(t.seed for t in traces))
