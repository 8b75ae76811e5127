"""Experiment configuration: strict YAML sections with documented defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from airsched.baselines import Policy


class ConfigError(ValueError):
    pass


@dataclass
class ChannelSection:
    frequency_correlation: float = 1.0
    path_loss_exponent: float = 2.0
    noise_scale: float = 1.0
    distances: Any = 1.0  # scalar or one value per device (metres)


@dataclass
class TimingSection:
    cycles_per_sample: float = 1e7
    cpu_hz: float = 0.5e9
    cpu_spread: float = 10.0  # fastest / slowest CPU ratio, device 0 fastest
    bandwidth: float = 20e6
    model_size: float = 11.7e6
    tau_min: float = 0.2


@dataclass
class PowerSection:
    pbar: float = 1.0
    pmax_ratio: float = 3.0
    epsilon0: float = 1e-5
    mode: str = "offline"  # offline | online | aligned (noiseless reference, ignores the budget)
    online_step: float | None = None  # default 0.1 / pmax
    max_iter: int = 10_000


@dataclass
class TrainSection:
    enabled: bool = True
    model: str = "softmax"
    learning_rate: float = 0.05
    local_iterations: int = 5
    batch_size: int = 32


@dataclass
class DataSection:
    source: str = "synthetic"  # synthetic | file
    path: str | None = None
    n_samples: int = 4000
    n_features: int = 10
    n_classes: int = 10
    separation: float = 1.5
    test_fraction: float = 0.2
    classes_per_device: list = field(default_factory=lambda: [1, 2, 3, 4])  # cycled over devices


@dataclass
class BaselineSection:
    k_fixed: int | None = None  # default: mean K_opt of fedairaoi on the same run
    deadline: float | None = None  # default: per-round median device time


@dataclass
class ExperimentConfig:
    n_devices: int = 20
    rounds: int = 500
    snr_db: list = field(default_factory=lambda: [10.0])
    policy: str = "fedairaoi"
    policies: list = field(default_factory=lambda: [p.value for p in Policy])
    master_seed: int = 0
    replications: int = 1
    channel: ChannelSection = field(default_factory=ChannelSection)
    timing: TimingSection = field(default_factory=TimingSection)
    power: PowerSection = field(default_factory=PowerSection)
    train: TrainSection = field(default_factory=TrainSection)
    data: DataSection = field(default_factory=DataSection)
    baselines: BaselineSection = field(default_factory=BaselineSection)

    def validate(self) -> "ExperimentConfig":
        if self.n_devices < 1 or self.rounds < 1 or self.replications < 1:
            raise ConfigError("n_devices, rounds and replications must be >= 1")
        if not self.snr_db:
            raise ConfigError("snr_db must list at least one value")
        for p in [self.policy, *self.policies]:
            try:
                Policy(p)
            except ValueError:
                raise ConfigError(f"unknown policy {p!r}") from None
        if self.power.mode not in ("offline", "online", "aligned"):
            raise ConfigError("power.mode must be 'offline', 'online' or 'aligned'")
        if self.power.pbar <= 0 or self.power.pmax_ratio < 1:
            raise ConfigError("need pbar > 0 and pmax_ratio >= 1")
        if self.power.epsilon0 <= 0:
            raise ConfigError("power.epsilon0 must be > 0")
        if not 0 < self.timing.tau_min <= 1:
            raise ConfigError("timing.tau_min must lie in (0, 1]")
        if self.timing.cpu_spread < 1:
            raise ConfigError("timing.cpu_spread must be >= 1")
        if self.data.source not in ("synthetic", "file"):
            raise ConfigError("data.source must be 'synthetic' or 'file'")
        if self.data.source == "file" and not self.data.path:
            raise ConfigError("data.path is required when data.source is 'file'")
        if not 0 < self.data.test_fraction < 1:
            raise ConfigError("data.test_fraction must lie in (0, 1)")
        if self.train.model not in ("softmax",):
            raise ConfigError("train.model must be 'softmax'")
        if not self.data.classes_per_device:
            raise ConfigError("data.classes_per_device must be non-empty")
        if self.baselines.deadline is not None and self.baselines.deadline <= 0:
            raise ConfigError("baselines.deadline must be > 0")
        if self.baselines.k_fixed is not None and not 1 <= self.baselines.k_fixed <= self.n_devices:
            raise ConfigError("baselines.k_fixed must lie in [1, n_devices]")
        if isinstance(self.snr_db, (int, float)):
            self.snr_db = [float(self.snr_db)]
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "channel": ChannelSection,
    "timing": TimingSection,
    "power": PowerSection,
    "train": TrainSection,
    "data": DataSection,
    "baselines": BaselineSection,
}


def _build(cls, raw: dict, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    return raw


def from_dict(raw: dict | None) -> ExperimentConfig:
    raw = dict(raw or {})
    _build(ExperimentConfig, raw, "config")
    kwargs = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = _SECTIONS[key](**_build(_SECTIONS[key], value or {}, key))
        else:
            kwargs[key] = value
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def load(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return from_dict(raw)


def apply_overrides(cfg: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply ``section.key=value`` (or ``key=value``) overrides; values are YAML scalars."""
    raw = cfg.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        target = raw
        for p in parts[:-1]:
            if p not in target or not isinstance(target[p], dict):
                raise ConfigError(f"unknown config section {p!r}")
            target = target[p]
        if parts[-1] not in target:
            raise ConfigError(f"unknown config key {key!r}")
        target[parts[-1]] = yaml.safe_load(value)
    return from_dict(raw)
