"""Experiment configuration: YAML file <-> nested dataclasses, plus presets."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from mecgame.best_response import PowerSearchConfig
from mecgame.scenario import GeneratorConfig, ScenarioError


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class GeneratorSection:
    num_bs: int = 5
    num_users: int = 20
    radius_m: float = 50.0
    bs_spacing_m: float = 100.0
    num_channels: int | None = None
    channel_bandwidth_hz: float = 5e6
    noise_power_w: float = 1e-13
    path_loss_exponent: float = 4.0
    interference_scale: float = 1.0
    min_bs_distance_m: float = 1.0


@dataclass
class UserSection:
    kappa: float = 1e-27
    f_max_hz: float = 1e9
    p_min_w: float = 1e-3
    p_max_w: float = 0.15
    alpha_t: Any = 1.0          # number, or list of per-user choices
    tx_range_m: float = 1e6


@dataclass
class TaskSection:
    input_bits: float = 5e6
    workload_cycles: float = 1e9


@dataclass
class CloudSection:
    frequency_hz: float = 1e10
    kappa: float = 1e-27


@dataclass
class EngineSection:
    schedule: str = "sequential"
    max_rounds: int = 500
    eps_power: float = 1e-6


@dataclass
class PoaSection:
    power_grid_points: int = 16
    exhaustive_limit: int = 6
    interference_multipliers: list = field(
        default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0])


@dataclass
class SweepSection:
    axis: str = "num_users"
    values: list = field(default_factory=lambda: [20, 30, 40, 50])
    seeds: int = 10


@dataclass
class ExperimentConfig:
    generator: GeneratorSection = field(default_factory=GeneratorSection)
    user: UserSection = field(default_factory=UserSection)
    task: TaskSection = field(default_factory=TaskSection)
    cloud: CloudSection = field(default_factory=CloudSection)
    engine: EngineSection = field(default_factory=EngineSection)
    power_search: PowerSearchConfig = field(default_factory=PowerSearchConfig)
    poa: PoaSection = field(default_factory=PoaSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    seed: int = 42
    channel_seed: int | None = None
    output_dir: str = "out"

    def generator_config(self) -> GeneratorConfig:
        g, u, t, c = self.generator, self.user, self.task, self.cloud
        alpha = tuple(u.alpha_t) if isinstance(u.alpha_t, (list, tuple)) else u.alpha_t
        try:
            return GeneratorConfig(
                num_bs=g.num_bs, num_users=g.num_users, radius_m=g.radius_m,
                bs_spacing_m=g.bs_spacing_m, num_channels=g.num_channels,
                channel_bandwidth_hz=g.channel_bandwidth_hz,
                noise_power_w=g.noise_power_w, path_loss_exponent=g.path_loss_exponent,
                input_bits=t.input_bits, workload_cycles=t.workload_cycles,
                kappa=u.kappa, f_max_hz=u.f_max_hz, p_min_w=u.p_min_w,
                p_max_w=u.p_max_w, alpha_t=alpha, tx_range_m=u.tx_range_m,
                cloud_frequency_hz=c.frequency_hz, cloud_kappa=c.kappa,
                interference_scale=g.interference_scale,
                min_bs_distance_m=g.min_bs_distance_m)
        except ScenarioError as exc:
            raise ConfigError("generator", str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


PRESETS = {
    # 5 BSs of 50 m radius, 5 MHz channels, 0.15 W, -100 dBm noise, gamma = 4,
    # 5000 kb inputs, 1000 Mcycles, 10 GHz server, kappa 1e-27, 1 GHz devices
    "reference": {},
    # same world, with each user's latency weight drawn from {1, 0.5, 0}
    "reference-mixed": {"user": {"alpha_t": [1.0, 0.5, 0.0]}},
    # small instances for exhaustive optimum / PoA studies
    "poa-small": {"generator": {"num_bs": 4, "num_users": 4}},
}

SWEEP_AXES = {
    "num_users": ("generator", "num_users", int),
    "input_bits": ("task", "input_bits", float),
    "workload_cycles": ("task", "workload_cycles", float),
    "alpha_t": ("user", "alpha_t", float),
    "interference_scale": ("generator", "interference_scale", float),
}

_SECTION_TYPES = {
    "generator": GeneratorSection, "user": UserSection, "task": TaskSection,
    "cloud": CloudSection, "engine": EngineSection, "power_search": PowerSearchConfig,
    "poa": PoaSection, "sweep": SweepSection,
}
_SCALARS = {"seed": int, "channel_seed": (int, type(None)), "output_dir": str}


def _check_type(path: str, value, default):
    if isinstance(default, float) and isinstance(value, str):
        # YAML 1.1 reads exponent literals without a dot ("5e6") as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(path, f"expected {type(default).__name__}, got {value!r}")
    return float(value) if isinstance(default, float) else value


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def from_mapping(data: Any) -> ExperimentConfig:
    if not isinstance(data, dict) or not data:
        raise ConfigError("", "config must be a non-empty mapping")
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; have {sorted(PRESETS)}")
        data = _merge(PRESETS[preset], data)
    cfg = ExperimentConfig()
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(key, "expected a mapping")
            section = getattr(cfg, key)
            known = {f.name: f for f in fields(section)}
            kw = asdict(section)
            for sk, sv in value.items():
                path = f"{key}.{sk}"
                if sk not in known:
                    raise ConfigError(path, "unknown field")
                default = kw[sk]
                if default is None:
                    if sv is not None and not isinstance(sv, int):
                        raise ConfigError(path, f"expected int or null, got {sv!r}")
                    kw[sk] = sv
                elif key == "user" and sk == "alpha_t" and isinstance(sv, list):
                    kw[sk] = [_check_type(path, x, 1.0) for x in sv]
                else:
                    kw[sk] = _check_type(path, sv, default)
            try:
                setattr(cfg, key, _SECTION_TYPES[key](**kw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, str(exc)) from exc
        elif key in _SCALARS:
            if not isinstance(value, _SCALARS[key]) or isinstance(value, bool):
                raise ConfigError(key, f"bad value {value!r}")
            setattr(cfg, key, value)
        else:
            raise ConfigError(key, "unknown field")
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if cfg.engine.schedule not in ("sequential", "parallel"):
        raise ConfigError("engine.schedule", "must be 'sequential' or 'parallel'")
    if cfg.engine.max_rounds < 1:
        raise ConfigError("engine.max_rounds", "must be >= 1")
    if not cfg.engine.eps_power >= 0:
        raise ConfigError("engine.eps_power", "must be non-negative")
    if cfg.poa.power_grid_points < 1:
        raise ConfigError("poa.power_grid_points", "must be >= 1")
    if cfg.sweep.axis not in SWEEP_AXES:
        raise ConfigError("sweep.axis", f"unknown axis; have {sorted(SWEEP_AXES)}")
    if cfg.sweep.seeds < 1:
        raise ConfigError("sweep.seeds", "must be >= 1")
    cfg.generator_config()


def preset(name: str = "reference") -> ExperimentConfig:
    return from_mapping({"preset": name})


def load(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"malformed YAML: {exc}") from exc
    return from_mapping(data)


def with_axis_value(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    """Copy of ``cfg`` with one sweep axis set.

    Sweeping ``input_bits`` keeps the cycles-per-bit ratio, so the workload
    grows with the input; ``workload_cycles`` leaves the input size alone.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError("sweep.axis", f"unknown axis {axis!r}; have {sorted(SWEEP_AXES)}")
    section, name, cast = SWEEP_AXES[axis]
    out = copy.deepcopy(cfg)
    if axis == "input_bits":
        per_bit = out.task.workload_cycles / out.task.input_bits
        out.task.workload_cycles = per_bit * float(value)
    setattr(getattr(out, section), name, cast(value))
    validate(out)
    return out
