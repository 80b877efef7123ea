"""Run configuration: named presets, JSON files and ``key=value`` overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

from qel.datagen import config_hash

PRESETS = {
    "maxcut16": {"kind": "maxcut", "size": 16},
    "maxcut25": {"kind": "maxcut", "size": 25},
    "qap16": {"kind": "qap", "size": 4, "penalty": 50.0},
    "qap25": {"kind": "qap", "size": 5, "penalty": 150.0},
    "bmp25": {"kind": "bmp", "size": 5, "penalty": 1.5, "d_node_features": 128, "batch_size": 2},
    "custom": {},
}

# keys that do not change results and are left out of the config hash
_NOT_HASHED = ("out_dir", "threads")
_DATA_KEYS = (
    "problem", "kind", "size", "penalty", "d_node_features", "density", "node_features",
    "n_instances", "n_train", "n_val", "n_test", "seed_data",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str = "maxcut16"
    kind: str = "maxcut"
    size: int = 16
    penalty: float = 0.0
    d_node_features: int = 128
    density: float = 0.1
    node_features: str = ""
    n_instances: int = 512
    n_train: int = 384
    n_val: int = 64
    n_test: int = 64
    p: int = 3
    encoder: str = "log"
    strategy: str = "withbias"
    optimizer: str = "adam"
    lr: float = 1e-3
    eta0: float = 0.1
    batch_size: int = 8
    epochs: int = 30
    patience: int = 10
    angle_scale: float = 0.1
    grad_mode: str = "exact"
    shots: int = 4096
    seed_data: int = 0
    seed_init: int = 0
    seed_train: int = 0
    seed_eval: int = 0
    out_dir: str = "runs/default"
    threads: int = 1

    def hash(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k not in _NOT_HASHED}
        return config_hash(d)

    def data_hash(self) -> str:
        d = asdict(self)
        return config_hash({k: d[k] for k in _DATA_KEYS})

    def seeds(self) -> dict:
        return {k: getattr(self, k) for k in ("seed_data", "seed_init", "seed_train", "seed_eval")}


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, value):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    default = getattr(RunConfig, key)
    try:
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {value!r} for {key}") from None


def make_config(overrides: dict | None = None) -> RunConfig:
    """Preset defaults first, then explicit keys (file or --set) on top."""
    overrides = dict(overrides or {})
    problem = overrides.get("problem", RunConfig.problem)
    if problem not in PRESETS:
        raise ConfigError(f"unknown preset {problem!r}; choose from {', '.join(PRESETS)}")
    values = {"problem": problem, **PRESETS[problem]}
    values.update(overrides)
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in values.items()})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.kind not in ("maxcut", "qap", "bmp"):
        raise ConfigError(f"unknown problem kind {cfg.kind!r}")
    if cfg.kind != "maxcut" and cfg.penalty <= 0:
        raise ConfigError(f"{cfg.kind} needs a positive penalty")
    if cfg.encoder not in ("lin", "log", "linear", "logistic"):
        raise ConfigError(f"unknown encoder {cfg.encoder!r}")
    if cfg.strategy not in ("original", "withbias", "multiangle"):
        raise ConfigError(f"unknown strategy {cfg.strategy!r}")
    if cfg.optimizer not in ("adam", "sgd"):
        raise ConfigError(f"unknown optimizer {cfg.optimizer!r}")
    if cfg.n_train + cfg.n_val + cfg.n_test > cfg.n_instances:
        raise ConfigError("split sizes exceed n_instances")
    if cfg.p < 1 or cfg.shots < 1 or cfg.batch_size < 1:
        raise ConfigError("p, shots and batch_size must be >= 1")
    from qel.gradient import GradMode

    try:
        GradMode.parse(cfg.grad_mode)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def parse_set(items) -> dict:
    """``key=value`` pairs; values are read as JSON when possible."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    return out


def load_config(path=None, sets=None, **flags) -> RunConfig:
    d = {}
    if path:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config file must hold a JSON object")
    d.update(parse_set(sets))
    d.update({k: v for k, v in flags.items() if v is not None})
    return make_config(d)


def with_seed(cfg: RunConfig, seed: int) -> RunConfig:
    return replace(cfg, seed_data=seed, seed_init=seed, seed_train=seed, seed_eval=seed)
