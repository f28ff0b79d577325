"""Run configuration: YAML file, every field defaulted, unknown keys rejected."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .biokit import ExperimentSpec


class ConfigError(Exception):
    pass


@dataclass
class WorldSection:
    width: int = 64
    height: int = 64
    D: float = 10.0


@dataclass
class HorizonSection:
    time: float | None = 2000.0
    events: int | None = None


@dataclass
class ReplenishSection:
    enabled: bool = True
    #: per-template target overrides, keys "op:<name>" or "obj:<class>"
    overrides: dict = field(default_factory=dict)


@dataclass
class ExperimentSection:
    ribosomes: int = 64
    factories_ribosome_model: int = 1
    factories_factory_model: int = 1
    plasmids_per_ribosome_enzyme: int = 2
    plasmids_per_factory_enzyme: int = 3
    consumable_scale: float = 1.0
    empty_objects: dict = field(default_factory=lambda: {0: 2, 1: 3})


@dataclass
class RunConfig:
    world: WorldSection = field(default_factory=WorldSection)
    seed: int = 0
    runs: int = 1
    horizon: HorizonSection = field(default_factory=HorizonSection)
    sample_dt: float = 100.0
    max_cost: int | None = 100_000
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    replenish: ReplenishSection = field(default_factory=ReplenishSection)
    #: worker processes for ensembles (0 = one per CPU, capped by runs)
    jobs: int = 0

    def experiment_spec(self) -> ExperimentSpec:
        e = self.experiment
        return ExperimentSpec(
            width=self.world.width, height=self.world.height,
            ribosomes=e.ribosomes,
            factories_ribosome_model=e.factories_ribosome_model,
            factories_factory_model=e.factories_factory_model,
            plasmids_per_ribosome_enzyme=e.plasmids_per_ribosome_enzyme,
            plasmids_per_factory_enzyme=e.plasmids_per_factory_enzyme,
            consumable_scale=e.consumable_scale,
            empty_objects={int(k): int(v) for k, v in e.empty_objects.items()},
            replenish_overrides=dict(self.replenish.overrides),
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _check_type(value, annotation: str, where: str):
    if value is None:
        if "None" in annotation:
            return None
        raise ConfigError(f"{where}: may not be null")
    if annotation.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
    elif annotation.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        value = float(value)
    elif annotation.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
    elif annotation.startswith("dict"):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping")
    return value


def _build(cls, data: Any, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown key(s) {', '.join(map(str, unknown))}")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        path = f"{where}.{name}" if where else name
        sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
        if sub is not None and dataclasses.is_dataclass(sub):
            kwargs[name] = _build(sub, value, path)
        else:
            kwargs[name] = _check_type(value, str(f.type), path)
    return cls(**kwargs)


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.world.width < 3 or cfg.world.height < 3:
        raise ConfigError("world: width and height must be at least 3")
    if not cfg.world.D > 0:
        raise ConfigError("world.D must be positive")
    if cfg.runs < 1:
        raise ConfigError("runs must be at least 1")
    if cfg.sample_dt <= 0:
        raise ConfigError("sample_dt must be positive")
    if cfg.horizon.time is None and cfg.horizon.events is None:
        raise ConfigError("horizon: give a time or an event limit")
    for k in cfg.experiment.empty_objects:
        if int(k) not in range(4):
            raise ConfigError(f"experiment.empty_objects: class {k} outside 0..3")
    return cfg


def from_dict(data: dict | None) -> RunConfig:
    return validate(_build(RunConfig, data, ""))


def load(path: str | Path | None) -> RunConfig:
    if path is None:
        return from_dict({})
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(data)
