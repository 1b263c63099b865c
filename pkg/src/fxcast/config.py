"""Experiment configuration: a versioned TOML schema, validation, and a
content hash for run manifests.

Schema (all keys optional unless noted):

    version = 1

    [data]
    bucket_seconds = 300        # resample interval
    window_len = 10             # inputs per prediction
    train_fraction = 0.8        # chronological split
    scaler_scope = "train_only" # or "full_series"

    [data.pairs]                # label -> CSV path; required by most commands
    "AUD/USD" = "fixtures/audusd.csv"

    [train]                     # TrainConfig fields
    learning_rate = 0.01
    epochs = 50
    dropout_rate = 0.1
    seed = 0
    bptt_horizon = 10           # optional; full window when absent
    shuffle_each_epoch = true
    gradient_clip = false

    [model]                     # architecture defaults
    hidden_layers = 6
    hidden_size = 128
    input_activation = "relu"
    hidden_activation = "tanh"
    output_activation = "linear"

    [model.lstm]                # per-architecture overrides (lstm/bp/rnn)
    hidden_size = 16

    [output]
    out_dir = "out"
    jobs = 2                    # parallel training jobs for compare

Dropout and seed live in [train] only; the per-architecture model spec copies
them, so there is a single knob for each. Unknown keys anywhere are errors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .models import Architecture, ModelSpec
from .numkit import ActivationKind
from .train import TrainConfig

CONFIG_VERSION = 1
SCALER_SCOPES = ("train_only", "full_series")
_MODEL_INT_KEYS = ("hidden_layers", "hidden_size")
_MODEL_ACT_KEYS = ("input_activation", "hidden_activation", "output_activation")
_MODEL_KEYS = _MODEL_INT_KEYS + _MODEL_ACT_KEYS


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment settings; see the module docstring for the file
    schema. ``jobs=None`` means use the machine's core count."""

    pairs: Dict[str, str] = field(default_factory=dict)
    bucket_seconds: int = 300
    window_len: int = 10
    train_fraction: float = 0.8
    scaler_scope: str = "train_only"
    train: TrainConfig = field(default_factory=TrainConfig)
    model_defaults: Dict[str, object] = field(default_factory=dict)
    model_overrides: Dict[str, Dict[str, object]] = field(default_factory=dict)
    out_dir: str = "out"
    jobs: Optional[int] = None

    def __post_init__(self):
        if self.bucket_seconds < 1:
            raise ConfigError(f"bucket_seconds must be >= 1, got {self.bucket_seconds}")
        if self.window_len < 1:
            raise ConfigError(f"window_len must be >= 1, got {self.window_len}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must be inside (0, 1), got {self.train_fraction}")
        if self.scaler_scope not in SCALER_SCOPES:
            raise ConfigError(
                f"scaler_scope must be one of {list(SCALER_SCOPES)}, "
                f"got {self.scaler_scope!r}")
        paths = list(self.pairs.values())
        if len(set(paths)) != len(paths):
            dupes = sorted({p for p in paths if paths.count(p) > 1})
            raise ConfigError(f"data source paths must be distinct: {dupes}")
        _check_model_table(self.model_defaults, "model")
        for arch, table in self.model_overrides.items():
            if arch not in (a.value for a in Architecture):
                raise ConfigError(f"unknown architecture table model.{arch}")
            _check_model_table(table, f"model.{arch}")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


def _check_model_table(table: Dict[str, object], where: str) -> None:
    for key, value in table.items():
        if key not in _MODEL_KEYS:
            raise ConfigError(f"unknown key {where}.{key}")
        if key in _MODEL_INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
        else:
            if not isinstance(value, str):
                raise ConfigError(f"{where}.{key} must be a string, got {value!r}")
            try:
                ActivationKind(value)
            except ValueError:
                choices = [k.value for k in ActivationKind]
                raise ConfigError(
                    f"{where}.{key} must be one of {choices}, got {value!r}"
                ) from None


def model_spec_for(config: ExperimentConfig, architecture: Architecture) -> ModelSpec:
    """Build the ModelSpec for one architecture: [model] defaults, then the
    [model.<arch>] override table, with window, dropout and seed copied from
    the data and train sections."""
    merged = dict(config.model_defaults)
    merged.update(config.model_overrides.get(architecture.value, {}))
    kwargs = {
        "architecture": architecture,
        "window_len": config.window_len,
        "dropout_rate": config.train.dropout_rate,
        "seed": config.train.seed,
    }
    for key in _MODEL_INT_KEYS:
        if key in merged:
            kwargs[key] = merged[key]
    for key in _MODEL_ACT_KEYS:
        if key in merged:
            kwargs[key] = ActivationKind(merged[key])
    try:
        return ModelSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# TOML loading


def _pop_typed(table, key, kind, default, where):
    if key not in table:
        return default
    value = table.pop(key)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{where}.{key} must be {kind.__name__}, got {value!r}")
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{key} must be {kind.__name__}, got {value!r}")
    return value


def _reject_unknown(table, where):
    if table:
        raise ConfigError(f"unknown key {where}.{sorted(table)[0]}")


def load_config(path, *, allow_high_lr: bool = False, seed: Optional[int] = None,
                out_dir: Optional[str] = None,
                jobs: Optional[int] = None) -> ExperimentConfig:
    """Read and validate a TOML experiment file.

    ``seed``, ``out_dir`` and ``jobs`` override the file's values (command
    line and environment take precedence over the file). ``allow_high_lr``
    lets learning rates above 0.1 through validation.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None

    if "version" not in raw:
        raise ConfigError("config file must declare a version")
    version = _pop_typed(raw, "version", int, CONFIG_VERSION, "config")
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version}")

    data = raw.pop("data", {})
    if not isinstance(data, dict):
        raise ConfigError("data must be a table")
    pairs_raw = data.pop("pairs", {})
    if not isinstance(pairs_raw, dict):
        raise ConfigError("data.pairs must be a table of label = \"path\"")
    pairs = {}
    for label, p in pairs_raw.items():
        if not isinstance(p, str):
            raise ConfigError(f"data.pairs.{label} must be a path string, got {p!r}")
        pairs[label] = p
    bucket_seconds = _pop_typed(data, "bucket_seconds", int, 300, "data")
    window_len = _pop_typed(data, "window_len", int, 10, "data")
    train_fraction = _pop_typed(data, "train_fraction", float, 0.8, "data")
    scaler_scope = _pop_typed(data, "scaler_scope", str, "train_only", "data")
    _reject_unknown(data, "data")

    tr = raw.pop("train", {})
    if not isinstance(tr, dict):
        raise ConfigError("train must be a table")
    train_kwargs = dict(
        learning_rate=_pop_typed(tr, "learning_rate", float, 0.01, "train"),
        epochs=_pop_typed(tr, "epochs", int, 50, "train"),
        dropout_rate=_pop_typed(tr, "dropout_rate", float, 0.1, "train"),
        seed=_pop_typed(tr, "seed", int, 0, "train"),
        bptt_horizon=_pop_typed(tr, "bptt_horizon", int, None, "train"),
        shuffle_each_epoch=_pop_typed(tr, "shuffle_each_epoch", bool, True, "train"),
        gradient_clip=_pop_typed(tr, "gradient_clip", bool, False, "train"),
        allow_high_lr=allow_high_lr,
    )
    _reject_unknown(tr, "train")
    if seed is not None:
        train_kwargs["seed"] = seed
    train = TrainConfig(**train_kwargs)

    model = raw.pop("model", {})
    if not isinstance(model, dict):
        raise ConfigError("model must be a table")
    overrides = {}
    for arch in Architecture:
        sub = model.pop(arch.value, None)
        if sub is not None:
            if not isinstance(sub, dict):
                raise ConfigError(f"model.{arch.value} must be a table")
            overrides[arch.value] = sub
    defaults = dict(model)

    output = raw.pop("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output must be a table")
    file_out = _pop_typed(output, "out_dir", str, "out", "output")
    file_jobs = _pop_typed(output, "jobs", int, None, "output")
    _reject_unknown(output, "output")
    _reject_unknown(raw, "config")

    return ExperimentConfig(
        pairs=pairs,
        bucket_seconds=bucket_seconds,
        window_len=window_len,
        train_fraction=train_fraction,
        scaler_scope=scaler_scope,
        train=train,
        model_defaults=defaults,
        model_overrides=overrides,
        out_dir=out_dir if out_dir is not None else file_out,
        jobs=jobs if jobs is not None else file_jobs,
    )


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    """A copy of the config with the training seed replaced."""
    return replace(config, train=replace(config.train, seed=seed))


def config_hash(config: ExperimentConfig) -> str:
    """Hash of every result-affecting field (where outputs go and how many
    jobs run do not change results, so they are excluded)."""
    t = config.train
    payload = {
        "version": CONFIG_VERSION,
        "pairs": dict(sorted(config.pairs.items())),
        "bucket_seconds": config.bucket_seconds,
        "window_len": config.window_len,
        "train_fraction": config.train_fraction,
        "scaler_scope": config.scaler_scope,
        "train": {
            "learning_rate": t.learning_rate,
            "epochs": t.epochs,
            "dropout_rate": t.dropout_rate,
            "seed": t.seed,
            "bptt_horizon": t.bptt_horizon,
            "shuffle_each_epoch": t.shuffle_each_epoch,
            "gradient_clip": t.gradient_clip,
        },
        "model_defaults": dict(sorted(config.model_defaults.items())),
        "model_overrides": {
            arch: dict(sorted(table.items()))
            for arch, table in sorted(config.model_overrides.items())
        },
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
