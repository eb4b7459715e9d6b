"""Flat experiment configuration, stored as YAML."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from .bounds import ReferenceParams
from .channel import ChannelParams
from .decoder import DecoderConfig
from .errors import DomainError
from .tuner import Objective, TuneGrid


@dataclass
class ExperimentConfig:
    # channel
    rho: float = 0.3
    sigma_z2: float = 1.0
    p0: float = 100.0
    # reference measure; null means "take the tuned maximizer"
    r: float | None = 4.0
    sigma_h2: float | None = 1.45
    # decoder
    m_count: int = 1024
    epsilon: float = 1e-3
    gamma: float | None = None
    n_max: int = 400
    trials: int = 500
    sample_trajectories: int = 4
    # bound landscape
    n_eval: int = 50
    trace_count: int = 200
    grid_r: list = field(default_factory=list)
    grid_sigma_h2: list = field(default_factory=list)
    objective: str = Objective.MEAN_BOUND_AT_N.value
    campaign_trials: int = 50
    # Szego convergence table
    szego_n: list = field(default_factory=lambda: [10, 100, 1000, 2000])
    master_seed: int = 0
    workers: int = 1
    out_dir: str = "out"

    @classmethod
    def fields(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.fields())
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise DomainError("config file must hold a flat mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self, path=None) -> str:
        text = yaml.safe_dump(self.to_dict(), sort_keys=False)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def override(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return self.from_dict({**self.to_dict(), **kw})

    def validate(self):
        for key in ("m_count", "n_max", "trials", "n_eval", "trace_count", "workers", "campaign_trials"):
            if int(getattr(self, key)) < 1:
                raise DomainError(f"{key} must be a positive integer")
        if self.sample_trajectories < 0:
            raise DomainError("sample_trajectories must be nonnegative")
        Objective(self.objective)
        self.channel()

    def channel(self) -> ChannelParams:
        return ChannelParams(rho=self.rho, sigma_z2=self.sigma_z2, p0=self.p0)

    @property
    def has_reference(self) -> bool:
        return self.r is not None and self.sigma_h2 is not None

    def reference(self) -> ReferenceParams:
        if not self.has_reference:
            raise DomainError("config needs explicit r and sigma_h2")
        return ReferenceParams(self.r, self.sigma_h2, self.rho)

    def decoder(self) -> DecoderConfig:
        return DecoderConfig(self.m_count, self.epsilon, self.n_max, self.channel(),
                             self.reference(), gamma=self.gamma)

    def grid(self) -> TuneGrid:
        kw = dict(objective=Objective(self.objective), n_eval=self.n_eval,
                  trace_count=self.trace_count, master_seed=self.master_seed,
                  m_count=self.m_count, epsilon=self.epsilon, n_max=self.n_max,
                  campaign_trials=self.campaign_trials)
        if self.grid_r and self.grid_sigma_h2:
            return TuneGrid(tuple(self.grid_r), tuple(self.grid_sigma_h2), **kw)
        return TuneGrid.default(self.rho, **kw)
