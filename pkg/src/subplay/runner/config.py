"""Flat, typed experiment configuration with a published schema.

Unknown keys are rejected. The hash covers the fully defaulted document in
canonical form, so key order and spelled-out defaults never change it.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from subplay.attack.loop import AttackConfig
from subplay.attack.occupancy import METHODS
from subplay.engine.config import EnvConfig
from subplay.observe import KINDS, Limitation
from subplay.training import HyperParams

SCENARIOS = ("1v3", "2v3", "3v3", "2v2", "4v2")
ENVIRONMENTS = ("predator_prey", "world_communication")
ALGORITHMS = ("ddpg", "maddpg")
OUTPUT_ROOT_ENV = "SUBPLAY_OUTPUT_ROOT"

# keys that do not change what a run computes
NON_SEMANTIC = ("output_dir",)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    environment: str = "predator_prey"
    scenario: str = "1v3"
    algorithm: str = "ddpg"
    limitation: str = "uncertainty"
    uncertainty_rate: float = 0.5
    observable_distance: float = 1.0
    proactive_mask_rate: float = 0.0
    occupancy_method: str = "static_observation"
    sub: int | None = None
    dr_lambda: float = 0.5
    ewa_beta: float = 0.9
    dissemination: bool = True
    meritocracy: bool = True
    merit_cadence: int = 100
    merit_episodes: int = 50
    preobserve_episodes: int = 100
    victim_episodes: int = 3000
    attack_episodes: int = 1000
    eval_episodes: int = 500
    seed: int = 0
    seeds: tuple = (0, 1, 2)
    episode_length: int = 25
    num_obstacles: int = 2
    predator_shaping_weight: float = 0.0
    hidden: int = 128
    lr: float = 0.001
    gamma: float = 0.95
    ema_decay: float = 0.95
    noise_std: float = 0.01
    attack_buffer: int = 512
    attack_batch: int = 512
    victim_buffer: int = 200_000
    victim_batch: int = 1024
    checkpoint_fraction: float = 0.01
    retrain_rounds: int = 5
    retrain_episodes: int = 1000
    access_fraction: float = 1.0
    finetune_steps: int = 1000
    finetune_cadence: int = 100
    finetune_lr_scale: float = 0.1
    activation_timesteps: int = 5000
    output_dir: str = "runs/default"

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        _choice("environment", self.environment, ENVIRONMENTS)
        _choice("scenario", self.scenario, SCENARIOS)
        _choice("algorithm", self.algorithm, ALGORITHMS)
        _choice("limitation", self.limitation, KINDS)
        _choice("occupancy_method", self.occupancy_method, METHODS)
        if self.limitation == "region" and self.environment != "world_communication":
            raise ConfigError("limitation 'region' requires environment 'world_communication'")
        if self.sub is not None and not 1 <= self.sub <= self.num_victims + 1:
            raise ConfigError(f"sub must lie in [1, {self.num_victims + 1}], got {self.sub}")
        for name in ("victim_episodes", "attack_episodes", "retrain_rounds", "finetune_steps",
                     "activation_timesteps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("eval_episodes", "merit_cadence", "merit_episodes", "finetune_cadence", "hidden",
                     "attack_buffer", "attack_batch", "victim_buffer", "victim_batch", "episode_length"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if not 0.0 < self.checkpoint_fraction <= 1.0:
            raise ConfigError("checkpoint_fraction must lie in (0, 1]")

    @property
    def num_adversaries(self) -> int:
        return int(self.scenario.split("v")[0])

    @property
    def num_victims(self) -> int:
        return int(self.scenario.split("v")[1])

    def env_config(self) -> EnvConfig:
        return EnvConfig(num_adversaries=self.num_adversaries, num_victims=self.num_victims,
                         environment=self.environment, episode_length=self.episode_length,
                         num_obstacles=self.num_obstacles, predator_shaping_weight=self.predator_shaping_weight,
                         gamma=self.gamma)

    def limitation_spec(self) -> Limitation:
        return Limitation(self.limitation, self.uncertainty_rate, self.observable_distance,
                          self.proactive_mask_rate)

    def hyper(self, team: str) -> HyperParams:
        cap, batch = ((self.attack_buffer, self.attack_batch) if team == "adversary"
                      else (self.victim_buffer, self.victim_batch))
        return HyperParams(self.algorithm, self.hidden, self.lr, self.gamma, self.ema_decay, self.noise_std,
                           cap, batch)

    def attack_config(self, **overrides) -> AttackConfig:
        kw = dict(sub=self.sub, occupancy_method=self.occupancy_method, dr_lambda=self.dr_lambda,
                  ewa_beta=self.ewa_beta, dissemination=self.dissemination, meritocracy=self.meritocracy,
                  merit_cadence=self.merit_cadence, merit_episodes=self.merit_episodes,
                  preobserve_episodes=self.preobserve_episodes, hyper=self.hyper("adversary"))
        kw.update(overrides)
        return AttackConfig(**kw)

    @property
    def checkpoint_every(self) -> int:
        return max(1, int(round(self.victim_episodes * self.checkpoint_fraction)))

    def output_path(self) -> Path:
        p = Path(self.output_dir)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not p.is_absolute():
            p = Path(root) / p
        return p

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    def semantic_dict(self, exclude=()) -> dict:
        d = self.to_dict()
        for k in NON_SEMANTIC + tuple(exclude):
            d.pop(k, None)
        return d

    def config_hash(self, exclude=()) -> str:
        return config_hash(self.semantic_dict(exclude))

    def replace(self, **changes) -> "ExperimentConfig":
        return from_dict({**self.to_dict(), **changes})


def _choice(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{name}: {value!r} not in {allowed}")


def config_hash(d: dict) -> str:
    text = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def schema() -> dict:
    """Key -> (type name, default)."""
    out = {}
    for f in fields(ExperimentConfig):
        out[f.name] = dict(type=str(f.type) if not isinstance(f.type, type) else f.type.__name__,
                           default=list(f.default) if isinstance(f.default, tuple) else f.default)
    return out


_TYPES = {"str": (str,), "int": (int,), "float": (int, float), "bool": (bool,)}


def _check_type(key, value, kind):
    if kind == "tuple":
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, int) and not isinstance(v, bool)
                                                           for v in value):
            raise ConfigError(f"{key}: expected a list of integers, got {value!r}")
        return
    if kind == "int | None":
        if value is None:
            return
        kind = "int"
    allowed = _TYPES[kind]
    if isinstance(value, bool) and bool not in allowed:
        raise ConfigError(f"{key}: expected {kind}, got {value!r}")
    if not isinstance(value, allowed):
        raise ConfigError(f"{key}: expected {kind}, got {value!r}")


def from_dict(d: dict) -> ExperimentConfig:
    known = schema()
    unknown = sorted(set(d) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for k, v in d.items():
        _check_type(k, v, known[k]["type"])
    kw = {k: (float(v) if known[k]["type"] == "float" else v) for k, v in d.items()}
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return from_dict(d)


def save_config(path, cfg: ExperimentConfig) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
