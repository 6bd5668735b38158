"""Scenario configuration: dataclass sections plus INI load/save.

A config file is plain INI; each ``[section]`` maps to one dataclass below and
every key must be one of its fields.  Omitted keys keep their defaults.

    [agents]
    count = 4
    comm_range = 50

    [sensor]
    clutter_rate = 10
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .phd import BirthModel
from .world import Area, ControlModel, MotionModel, SensorModel


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldSection:
    width: float = 100.0
    height: float = 100.0


@dataclass(frozen=True)
class MotionSection:
    T: float = 1.0
    p_survive: float = 0.99
    noise_intensity: float = 1.0


@dataclass(frozen=True)
class TargetsSection:
    count: int = 0
    birth: str = "uniform"  # uniform | center
    birth_window: int = 0  # birth steps drawn uniformly from [0, birth_window]
    lifetime: str = "geometric"  # geometric | fixed | survival
    lifetime_mean: float = 60.0
    speed: float = math.sqrt(2.0)
    noise_scale: float = 0.01


@dataclass(frozen=True)
class SensorSection:
    side: float = 10.0
    pd_max: float = 0.99
    range_noise0: float = 1.0
    range_noise_slope: float = 5e-5
    bearing_noise0: float = math.pi / 180
    bearing_noise_slope: float = 1e-5
    clutter_rate: float = 10.0
    clutter_support: str = "surveillance"  # surveillance | footprint


@dataclass(frozen=True)
class ControlSection:
    radial_step: float = 2.0
    radial_levels: int = 2
    angular_divisions: int = 8


@dataclass(frozen=True)
class FilterSection:
    birth_rate: float = 0.3
    birth_particles: int = 300
    birth_velocity_std: float = 1.0
    rho: int = 1000
    kmeans_restarts: int = 10
    persistent_only: bool = True  # leave this scan's births out of the estimate


@dataclass(frozen=True)
class SearchSection:
    cell: float = 10.0
    init_value: float = 0.01
    decay: float = 0.999
    threshold: float = 0.5
    connectivity: int = 8
    replan_fraction: float = 0.25
    revisit_fraction: float = 0.25  # stalest share of cells patrolled once all are searched


@dataclass(frozen=True)
class TrackingSection:
    enabled: bool = True
    alpha: float = 0.5
    lost_steps: int = 5
    switch_cooldown: int = 10


@dataclass(frozen=True)
class OverlapSection:
    enabled: bool = True
    window: int = 3
    cutoff: float = 50.0
    threshold: float = 0.9


@dataclass(frozen=True)
class AgentsSection:
    count: int = 4
    comm_range: float = 50.0
    policy: str = "cooperative"  # cooperative | random


@dataclass(frozen=True)
class RunSection:
    horizon: int = 100
    seed: int = 0


@dataclass(frozen=True)
class MetricsSection:
    searched_threshold: float = 0.5
    track_eps: float = 5.0
    ospa_cutoff: float = 50.0


@dataclass(frozen=True)
class ScenarioConfig:
    world: WorldSection = field(default_factory=WorldSection)
    motion: MotionSection = field(default_factory=MotionSection)
    targets: TargetsSection = field(default_factory=TargetsSection)
    sensor: SensorSection = field(default_factory=SensorSection)
    control: ControlSection = field(default_factory=ControlSection)
    filter: FilterSection = field(default_factory=FilterSection)
    search: SearchSection = field(default_factory=SearchSection)
    tracking: TrackingSection = field(default_factory=TrackingSection)
    overlap: OverlapSection = field(default_factory=OverlapSection)
    agents: AgentsSection = field(default_factory=AgentsSection)
    run: RunSection = field(default_factory=RunSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)

    # --- model views ------------------------------------------------------
    def area(self) -> Area:
        return Area(0.0, self.world.width, 0.0, self.world.height)

    def motion_model(self) -> MotionModel:
        m = self.motion
        return MotionModel(m.T, m.p_survive, m.noise_intensity)

    def truth_motion_model(self) -> MotionModel:
        return self.motion_model().scaled(self.targets.noise_scale)

    def sensor_model(self) -> SensorModel:
        params = _asdict(self.sensor)
        support = params.pop("clutter_support")
        # the farthest any point of the area can be from an agent inside it
        reach = math.hypot(self.world.width, self.world.height) if support == "surveillance" else 0.0
        return SensorModel(**params, clutter_max_range=reach)

    def control_model(self) -> ControlModel:
        return ControlModel(**_asdict(self.control))

    def birth_model(self) -> BirthModel:
        f = self.filter
        return BirthModel(f.birth_rate, f.birth_particles, f.birth_velocity_std)

    def with_overrides(self, overrides: dict[str, Any]) -> "ScenarioConfig":
        """Apply ``{"section.key": value}`` overrides and validate."""
        cfg = self
        for path, value in overrides.items():
            section, key = _split(path)
            sec = getattr(cfg, section)
            cfg = replace(cfg, **{section: replace(sec, **{key: _coerce(sec, key, value, path)})})
        validate(cfg)
        return cfg


def _asdict(sec) -> dict:
    return {f.name: getattr(sec, f.name) for f in fields(sec)}


def _split(path: str) -> tuple[str, str]:
    if path.count(".") != 1:
        raise ConfigError(f"{path}: expected 'section.key'")
    section, key = path.split(".")
    names = {f.name for f in fields(ScenarioConfig)}
    if section not in names:
        raise ConfigError(f"{path}: unknown section '{section}'")
    sec_fields = {f.name for f in fields(getattr(ScenarioConfig(), section))}
    if key not in sec_fields:
        raise ConfigError(f"{path}: unknown key '{key}'")
    return section, key


def _coerce(sec, key: str, value, path: str):
    default = getattr(sec, key)
    try:
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            f = float(value)
            if not f.is_integer():
                raise ValueError(value)
            return int(f)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: cannot parse {value!r} as {type(default).__name__}") from None


def validate(cfg: ScenarioConfig) -> None:
    def need(cond: bool, msg: str):
        if not cond:
            raise ConfigError(msg)

    s = cfg.sensor
    need(s.side > 0, "sensor.side: must be positive")
    need(0 < s.pd_max <= 1, "sensor.pd_max: must lie in (0, 1]")
    need(
        min(s.range_noise0, s.range_noise_slope, s.bearing_noise0, s.bearing_noise_slope, s.clutter_rate) >= 0,
        "sensor: noise coefficients and clutter_rate must be >= 0",
    )
    need(
        s.clutter_support in ("surveillance", "footprint"),
        "sensor.clutter_support: must be 'surveillance' or 'footprint'",
    )
    need(cfg.world.width > 0 and cfg.world.height > 0, "world: width and height must be positive")
    need(cfg.motion.T > 0, "motion.T: must be positive")
    need(0 < cfg.motion.p_survive <= 1, "motion.p_survive: must lie in (0, 1]")
    need(cfg.motion.noise_intensity >= 0, "motion.noise_intensity: must be >= 0")
    need(cfg.control.radial_step > 0, "control.radial_step: must be positive")
    need(cfg.control.radial_levels >= 0 and cfg.control.angular_divisions >= 1, "control: invalid action grid")
    need(0 < cfg.tracking.alpha < 1, "tracking.alpha: must lie in (0, 1)")
    need(0 < cfg.search.decay <= 1, "search.decay: must lie in (0, 1]")
    need(0 < cfg.search.threshold < 1, "search.threshold: must lie in (0, 1)")
    need(0 < cfg.search.init_value <= 1, "search.init_value: must lie in (0, 1]")
    need(cfg.search.cell > 0, "search.cell: must be positive")
    need(0 <= cfg.search.revisit_fraction <= 1, "search.revisit_fraction: must lie in [0, 1]")
    need(cfg.search.connectivity in (4, 8), "search.connectivity: must be 4 or 8")
    need(cfg.agents.count >= 1, "agents.count: must be >= 1")
    need(cfg.agents.policy in ("cooperative", "random"), "agents.policy: must be 'cooperative' or 'random'")
    need(
        cfg.agents.comm_range >= math.sqrt(2) * s.side / 2,
        f"agents.comm_range: communication range must be >= sqrt(2)*a/2 = {math.sqrt(2) * s.side / 2:.4g}",
    )
    need(cfg.targets.count >= 0, "targets.count: must be >= 0")
    need(cfg.targets.birth in ("uniform", "center"), "targets.birth: must be 'uniform' or 'center'")
    need(cfg.targets.lifetime in ("geometric", "fixed", "survival"), "targets.lifetime: unknown law")
    need(cfg.targets.lifetime_mean >= 1, "targets.lifetime_mean: must be >= 1")
    need(cfg.targets.birth_window >= 0, "targets.birth_window: must be >= 0")
    need(cfg.filter.rho >= 1 and cfg.filter.birth_particles >= 0, "filter: particle counts must be positive")
    need(cfg.filter.birth_rate >= 0, "filter.birth_rate: must be >= 0")
    need(cfg.overlap.window >= 1 and cfg.overlap.cutoff > 0, "overlap: window >= 1 and cutoff > 0")
    need(cfg.run.horizon >= 1, "run.horizon: must be >= 1")
    need(cfg.metrics.ospa_cutoff > 0, "metrics.ospa_cutoff: must be positive")


def config_from_mapping(data: dict[str, dict[str, Any]]) -> ScenarioConfig:
    overrides = {}
    for section, items in data.items():
        for key, value in items.items():
            overrides[f"{section}.{key}"] = value
    return ScenarioConfig().with_overrides(overrides)


def load_config(path) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (motion.T)
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if parser.defaults():
        raise ConfigError(f"{path}: keys outside a section: {sorted(parser.defaults())}")
    return config_from_mapping({s: dict(parser.items(s)) for s in parser.sections()})


def dump_config(cfg: ScenarioConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for f in fields(cfg):
        sec = getattr(cfg, f.name)
        parser[f.name] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in _asdict(sec).items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))
