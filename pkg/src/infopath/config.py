"""JSON experiment configuration.

A config document looks like::

    {
      "formula": "(!U U C) & (!C U D2) & (!D2 U D1)",
      "grid": {"width": 5, "height": 5, "ap": ["D1", "D2", "C", "U"],
               "start": 0, "terminal": null,
               "counts": {"D1": 2, "D2": 2, "U": 3},
               "fixed_labels": null, "dm_low": 0.0, "dm_high": 10.0},
      "sensor": {"mu0": 0.9, "lam": 0.01, "r": 0.01},
      "belief": {"mode": "factored", "prior": 0.5},
      "p_target": 0.08,
      "planner": {"mode": "rhc", "horizon": 3, "exact_cap": 12, "mc_samples": 512},
      "trials": 100, "seed": 0, "fixed_environment": false,
      "stop_at_acceptance": true, "record_timing": true, "jobs": 1,
      "hist_bins": 20, "transition_system": null
    }

Every key is optional.  ``transition_system`` may hold a serialized
transition system (see ``TransitionSystem.to_json``), in which case the
grid generator is bypassed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .planners import PlanConfig
from .simkit.world import GridSpec

SPEC_FORMULA = "(!U U C) & (!C U D2) & (!D2 U D1)"
MODES = ("rhc", "exhaustive", "compare")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    formula: str = SPEC_FORMULA
    grid: GridSpec = field(default_factory=GridSpec)
    mu0: float = 0.9
    lam: float = 0.01
    r: float = 0.01
    belief_mode: str = "factored"
    prior: float = 0.5
    p_target: float = 0.08
    mode: str = "rhc"
    horizon: int = 3
    exact_cap: int = 12
    mc_samples: int = 512
    trials: int = 100
    seed: int = 0
    fixed_environment: bool = False
    stop_at_acceptance: bool = True
    record_timing: bool = True
    jobs: int = 1
    hist_bins: int = 20
    max_redraws: int = 1000
    transition_system: dict | None = None

    def __post_init__(self) -> None:
        for name in ("mu0", "r", "prior", "p_target"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.lam < 0:
            raise ConfigError("lam must be nonnegative")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.belief_mode not in ("factored", "joint"):
            raise ConfigError("belief mode must be 'factored' or 'joint'")
        if self.trials < 0 or self.jobs < 1:
            raise ConfigError("trials must be >= 0 and jobs >= 1")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def plan(self) -> PlanConfig:
        return PlanConfig(self.horizon, self.exact_cap, self.mc_samples, self.seed)

    @property
    def ap(self) -> tuple[str, ...]:
        if self.transition_system is not None:
            return tuple(self.transition_system["ap"])
        return tuple(self.grid.ap)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        kw: dict = {}
        try:
            if "grid" in data:
                g = dict(data.pop("grid"))
                if "ap" in g:
                    g["ap"] = tuple(g["ap"])
                kw["grid"] = GridSpec(**g)
            for section, keys in (
                ("sensor", {"mu0": "mu0", "lam": "lam", "r": "r"}),
                ("belief", {"mode": "belief_mode", "prior": "prior"}),
                ("planner", {"mode": "mode", "horizon": "horizon", "exact_cap": "exact_cap",
                             "mc_samples": "mc_samples"}),
            ):
                sub = data.pop(section, {}) or {}
                for k, v in sub.items():
                    if k not in keys:
                        raise ConfigError(f"unknown key {section}.{k}")
                    kw[keys[k]] = v
            names = {f.name for f in fields(cls)}
            for k, v in data.items():
                if k not in names or k == "grid":
                    raise ConfigError(f"unknown config key {k!r}")
                kw[k] = v
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"]["ap"] = list(self.grid.ap)
        return d


def load_config(path: str | Path | None, **overrides) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    cfg = ExperimentConfig.from_dict(data)
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    cfg.__post_init__()
    return cfg
