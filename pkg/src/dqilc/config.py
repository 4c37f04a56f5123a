"""Experiment configuration, presets and YAML round-tripping."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dual_algebra import DualInertia
from .dual_quaternion import Pose, UnitDualQuaternion, pose_to_dq
from .ilc_controller import ControllerGains, SegmentGrid
from .quaternion import Quaternion, normalize
from .rigid_body_sim import DesiredTrajectory, DisturbanceConfig

VARIANTS = ("unsaturated", "saturated")

# attitude printed to four decimals; renormalized before use
REFERENCE_ATTITUDE = (0.7055, 0.0471, -0.7055, -0.0471)
REFERENCE_POSITION = (0.0, 0.0, -6778200.0)

TRUE_INERTIA = ((12.0, 1.0, 1.0), (1.0, 10.0, 2.0), (1.0, 2.0, 10.0))
NOMINAL_INERTIA = ((20.0, 2.0, 1.0), (2.0, 15.0, 3.0), (1.0, 3.0, 15.0))


@dataclass(frozen=True)
class BodyConfig:
    mass: float = 19.0
    inertia: tuple = TRUE_INERTIA
    nominal_mass: float = 20.0
    nominal_inertia: tuple = NOMINAL_INERTIA

    def dual_inertia(self) -> DualInertia:
        return DualInertia(self.mass, np.array(self.inertia))

    def nominal_dual_inertia(self) -> DualInertia:
        return DualInertia(self.nominal_mass, np.array(self.nominal_inertia))


@dataclass(frozen=True)
class ReferenceConfig:
    attitude: tuple = REFERENCE_ATTITUDE
    position: tuple = REFERENCE_POSITION
    trajectory: DesiredTrajectory = field(default_factory=DesiredTrajectory)

    def initial_pose(self) -> UnitDualQuaternion:
        Q = normalize(Quaternion(np.array(self.attitude, dtype=float)))
        return pose_to_dq(Pose(Q, np.array(self.position, dtype=float)))


@dataclass(frozen=True)
class ExperimentConfig:
    duration: float = 20.0
    frequency: float = 1000.0
    iterations: int = 31  # k = 0..30
    segments: int = 200
    variant: str = "saturated"
    gains: ControllerGains = field(default_factory=ControllerGains)
    body: BodyConfig = field(default_factory=BodyConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    output_dir: str = "runs/default"

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "saturated" and self.gains.k_l is None:
            raise ValueError("the saturated variant needs gains.k_l")
        ticks = self.duration * self.frequency
        if abs(ticks - round(ticks)) > 1e-9 * ticks:
            raise ValueError("duration * frequency must be a whole number of ticks")

    @property
    def dt(self) -> float:
        return 1.0 / self.frequency

    @property
    def n_steps(self) -> int:
        return int(round(self.duration * self.frequency))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def saturated(self) -> bool:
        return self.variant == "saturated"

    def grid(self) -> SegmentGrid:
        return SegmentGrid.uniform(self.duration, self.segments)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return self.replace(disturbance=dataclasses.replace(self.disturbance, seed=int(seed)))


def proximity_preset(**overrides) -> ExperimentConfig:
    """The spacecraft proximity-operation scenario with 200 segments."""
    return ExperimentConfig(**overrides)


def two_segment_preset(**overrides) -> ExperimentConfig:
    return ExperimentConfig(segments=2, **overrides)


PRESETS = {"proximity": proximity_preset, "proximity-s2": two_segment_preset}


# -- serialization -----------------------------------------------------------


def _plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def to_dict(cfg: ExperimentConfig) -> dict:
    return _plain(cfg)


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def _build(cls, data: dict | None):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ValueError(f"expected a mapping for {cls.__name__}, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    nested = {
        "gains": ControllerGains,
        "body": BodyConfig,
        "disturbance": DisturbanceConfig,
        "reference": ReferenceConfig,
        "trajectory": DesiredTrajectory,
    }
    for key, value in data.items():
        if key in nested:
            kwargs[key] = _build(nested[key], value)
        else:
            kwargs[key] = _tuplify(value)
    return cls(**kwargs)


def from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        data = {}
    preset = data.pop("preset", None) if isinstance(data, dict) else None
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = to_dict(PRESETS[preset]())
        data = _merge(base, data)
    return from_dict(data)


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(dump_config(cfg))


def validate(cfg: ExperimentConfig) -> list[str]:
    """Build every derived object once; returns human-readable findings (empty when clean)."""
    problems = []
    try:
        cfg.body.dual_inertia()
        cfg.body.nominal_dual_inertia()
    except ValueError as exc:
        problems.append(f"body: {exc}")
    try:
        cfg.reference.initial_pose()
    except ValueError as exc:
        problems.append(f"reference: {exc}")
    try:
        grid = cfg.grid()
        ticks_per_segment = cfg.n_steps / grid.count
        if ticks_per_segment < 1:
            problems.append(f"segments: {grid.count} segments but only {cfg.n_steps} steps")
    except ValueError as exc:
        problems.append(f"segments: {exc}")
    q_norm = math.sqrt(sum(a * a for a in cfg.reference.attitude))
    if abs(q_norm - 1.0) > 1e-3:
        problems.append(f"reference.attitude norm {q_norm:.6f} is far from 1")
    return problems
