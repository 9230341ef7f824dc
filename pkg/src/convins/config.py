"""Scenario configuration: TOML text with defaults for every key.

Layout (all sections and keys optional)::

    schema_version = 1

    [trajectory]
    origin_lat_deg = 45.0
    origin_lon_deg = 7.0
    origin_alt_m = 100.0
    initial_yaw_deg = 20.0
    dt = 0.01
    duration = 3000.0
    speed = 15.0
    # [[trajectory.segments]] kind = "turn", duration = 30, speed = 15, turn_rate_deg_s = 3

    [errors]
    warmup = 5.0
    [errors.gyro]
    bias_deg_h = 100.0           # scalar or 3-list
    scale_factor = 0.05
    noise_deg_s_rthz = 0.1
    sample_rate = 100.0
    [errors.accel]
    bias_ug = 1000.0
    scale_factor = 0.01
    noise_ug_rthz = 500.0
    sample_rate = 100.0

    [train]
    variants = ["superficial", "medium", "deep"]
    epochs = 40
    batch = 32
    lr = 1e-3
    window = 32
    seed = 7
    optimizer = "adam"

    [experiment]
    train_fraction = 0.5
    output_dir = "out"
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli

from .earth import G0, GeodeticPosition
from .imu import TriadErrorModel
from .nn.layers import ShapeError
from .nn.network import VARIANTS, build_variant
from .nn.train import TrainConfig
from .trajectory import SegmentError, SegmentSpec, default_segments

SCHEMA_VERSION = 1
#: Environment variable naming the default output directory.
OUTPUT_ENV = "CONVINS_OUT"
DEG = math.pi / 180.0


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted key or ``line`` the source line."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        prefix = f"{path}: " if path else (f"line {line}: " if line else "")
        super().__init__(prefix + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class TrajectoryConfig:
    origin: GeodeticPosition = GeodeticPosition(math.radians(45.0), math.radians(7.0), 100.0)
    initial_yaw: float = math.radians(20.0)
    dt: float = 0.01
    duration: float = 3000.0
    speed: float = 15.0
    segments: tuple[SegmentSpec, ...] | None = None

    def script(self) -> list[SegmentSpec]:
        if self.segments is not None:
            return list(self.segments)
        return default_segments(self.duration, self.speed)


@dataclass(frozen=True)
class ErrorConfig:
    gyro: TriadErrorModel
    accel: TriadErrorModel
    warmup: float = 5.0


def default_errors(rate: float = 100.0) -> ErrorConfig:
    from .imu import mems_accel, mems_gyro
    return ErrorConfig(mems_gyro(rate), mems_accel(rate), 5.0)


@dataclass(frozen=True)
class TrainSection:
    variants: tuple[str, ...] = VARIANTS
    epochs: int = 40
    batch: int = 32
    lr: float = 1e-3
    window: int = 32
    seed: int = 7
    optimizer: str = "adam"

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch, learning_rate=self.lr,
                           seed=seed, optimizer=self.optimizer)


@dataclass(frozen=True)
class ExperimentSection:
    train_fraction: float = 0.5
    output_dir: str = field(default_factory=lambda: os.environ.get(OUTPUT_ENV, "out"))


@dataclass(frozen=True)
class ScenarioConfig:
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    errors: ErrorConfig = field(default_factory=default_errors)
    train: TrainSection = field(default_factory=TrainSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    schema_version: int = SCHEMA_VERSION

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, train=replace(self.train, seed=int(seed)))

    def validate(self) -> "ScenarioConfig":
        validate(self)
        return self


# ---------------------------------------------------------------------------
# parsing

def _take(table: dict, key: str, path: str, kind, default):
    if key not in table:
        return default
    v = table.pop(key)
    full = f"{path}.{key}" if path else key
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError("expected a number", full)
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError("expected an integer", full)
        return v
    if kind == "vec3":
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
        if isinstance(v, list) and len(v) == 3 and all(isinstance(a, (int, float)) for a in v):
            return [float(a) for a in v]
        raise ConfigError("expected a number or a list of 3 numbers", full)
    if not isinstance(v, kind):
        raise ConfigError(f"expected {kind.__name__}", full)
    return v


def _leftover(table: dict, path: str):
    if table:
        key = sorted(table)[0]
        raise ConfigError("unknown key", f"{path}.{key}" if path else key)


def _section(doc: dict, key: str) -> dict:
    v = doc.pop(key, {})
    if not isinstance(v, dict):
        raise ConfigError("expected a table", key)
    return dict(v)


def _parse_segments(items, path: str) -> tuple[SegmentSpec, ...]:
    if not isinstance(items, list):
        raise ConfigError("expected an array of tables", path)
    out = []
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError("expected a table", p)
        item = dict(item)
        kind = _take(item, "kind", p, str, None)
        if kind is None:
            raise ConfigError("missing key", f"{p}.kind")
        seg = SegmentSpec(kind,
                          _take(item, "duration", p, float, 0.0),
                          _take(item, "speed", p, float, 0.0),
                          _take(item, "turn_rate_deg_s", p, float, 0.0) * DEG,
                          _take(item, "climb_rate", p, float, 0.0))
        _leftover(item, p)
        try:
            seg.validate(i)
        except SegmentError as exc:
            raise ConfigError(str(exc), p) from None
        out.append(seg)
    return tuple(out)


def _parse_triad(t: dict, path: str, default: TriadErrorModel, accel: bool) -> TriadErrorModel:
    if accel:
        bias = _take(t, "bias_ug", path, "vec3", None)
        bias = default.bias if bias is None else np.asarray(bias) * 1e-6 * G0
        noise = _take(t, "noise_ug_rthz", path, float, None)
        noise = default.noise_density if noise is None else noise * 1e-6 * G0
    else:
        bias = _take(t, "bias_deg_h", path, "vec3", None)
        bias = default.bias if bias is None else np.asarray(bias) * DEG / 3600.0
        noise = _take(t, "noise_deg_s_rthz", path, float, None)
        noise = default.noise_density if noise is None else noise * DEG
    sf = _take(t, "scale_factor", path, "vec3", None)
    sf = default.scale_factor if sf is None else sf
    rate = _take(t, "sample_rate", path, float, default.sample_rate)
    _leftover(t, path)
    try:
        return TriadErrorModel(bias, sf, noise, rate)
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


def parse_config(text: str) -> ScenarioConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"parse error: {exc}", line=line) from None

    version = _take(doc, "schema_version", "", int, SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}", "schema_version")

    t = _section(doc, "trajectory")
    d = TrajectoryConfig()
    origin = GeodeticPosition(
        math.radians(_take(t, "origin_lat_deg", "trajectory", float, math.degrees(d.origin.latitude))),
        math.radians(_take(t, "origin_lon_deg", "trajectory", float, math.degrees(d.origin.longitude))),
        _take(t, "origin_alt_m", "trajectory", float, d.origin.altitude),
    ) if {"origin_lat_deg", "origin_lon_deg", "origin_alt_m"} & t.keys() else d.origin
    segs = t.pop("segments", None)
    traj = TrajectoryConfig(
        origin=origin,
        initial_yaw=_take(t, "initial_yaw_deg", "trajectory", float, math.degrees(d.initial_yaw)) * DEG,
        dt=_take(t, "dt", "trajectory", float, d.dt),
        duration=_take(t, "duration", "trajectory", float, d.duration),
        speed=_take(t, "speed", "trajectory", float, d.speed),
        segments=None if segs is None else _parse_segments(segs, "trajectory.segments"),
    )
    _leftover(t, "trajectory")

    e = _section(doc, "errors")
    rate = 1.0 / traj.dt if traj.dt > 0 else 100.0
    de = default_errors(rate)
    g = dict(e.pop("gyro", {}))
    a = dict(e.pop("accel", {}))
    errors = ErrorConfig(_parse_triad(g, "errors.gyro", de.gyro, accel=False),
                         _parse_triad(a, "errors.accel", de.accel, accel=True),
                         _take(e, "warmup", "errors", float, de.warmup))
    _leftover(e, "errors")

    tr = _section(doc, "train")
    dt_ = TrainSection()
    variants = _take(tr, "variants", "train", list, list(dt_.variants))
    train = TrainSection(
        variants=tuple(variants),
        epochs=_take(tr, "epochs", "train", int, dt_.epochs),
        batch=_take(tr, "batch", "train", int, dt_.batch),
        lr=_take(tr, "lr", "train", float, dt_.lr),
        window=_take(tr, "window", "train", int, dt_.window),
        seed=_take(tr, "seed", "train", int, dt_.seed),
        optimizer=_take(tr, "optimizer", "train", str, dt_.optimizer),
    )
    _leftover(tr, "train")

    x = _section(doc, "experiment")
    de_ = ExperimentSection()
    experiment = ExperimentSection(
        train_fraction=_take(x, "train_fraction", "experiment", float, de_.train_fraction),
        output_dir=_take(x, "output_dir", "experiment", str, de_.output_dir),
    )
    _leftover(x, "experiment")
    _leftover(doc, "")

    return ScenarioConfig(traj, errors, train, experiment, version).validate()


def validate(cfg: ScenarioConfig) -> None:
    t = cfg.trajectory
    if not t.dt > 0:
        raise ConfigError("must be positive", "trajectory.dt")
    if not t.duration > 0:
        raise ConfigError("must be positive", "trajectory.duration")
    if not t.speed >= 0:
        raise ConfigError("must be non-negative", "trajectory.speed")
    if t.segments is None:
        try:
            default_segments(t.duration, t.speed)
        except ValueError as exc:
            raise ConfigError(f"{exc}; give explicit segments for shorter runs",
                              "trajectory.duration") from None
    for name, model in (("gyro", cfg.errors.gyro), ("accel", cfg.errors.accel)):
        if abs(model.sample_rate * t.dt - 1.0) > 1e-9:
            raise ConfigError(f"must equal 1/trajectory.dt = {1.0 / t.dt:g} Hz",
                              f"errors.{name}.sample_rate")
    if cfg.errors.warmup < 0:
        raise ConfigError("must be non-negative", "errors.warmup")
    step = 1.0 / t.dt
    if abs(step - round(step)) > 1e-6:
        raise ConfigError("1/dt must be an integer so the series decimates to 1 Hz", "trajectory.dt")

    tr = cfg.train
    if not tr.variants:
        raise ConfigError("at least one variant required", "train.variants")
    for v in tr.variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}", "train.variants")
        try:
            build_variant(v, tr.window)
        except ShapeError as exc:
            raise ConfigError(f"too small for the {v} variant: {exc}", "train.window") from None
    try:
        tr.train_config(tr.seed)
    except ValueError as exc:
        raise ConfigError(str(exc), "train") from None
    if tr.window < 1:
        raise ConfigError("must be positive", "train.window")
    f = cfg.experiment.train_fraction
    if not 0 < f < 1:
        raise ConfigError("must lie strictly between 0 and 1", "experiment.train_fraction")


def load_config(path) -> ScenarioConfig:
    """Load and validate a scenario file; ``"default"`` yields all defaults."""
    if str(path) == "default":
        return ScenarioConfig().validate()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such file: {p}")
    return parse_config(p.read_text())
