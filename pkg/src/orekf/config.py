"""Declarative run configuration: a flat `key = value` text format with an
explicit schema version, plus builders for the simulation and filter
objects. Values are scalars or comma-separated lists; `#` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .gating import GatingConfig, METHODS
from .matching import MatchConfig
from .presets import ScenarioPreset, get_preset
from .propagation import ImuNoise
from .runner import FilterSetup
from .sim import SensorSpec, TrajectorySpec, WorldSpec, camera_forward_extrinsics

SCHEMA_VERSION = 1

SIGMA_MODES = ("exact", "fixed", "episodes")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str = "preset01"
    duration: float = 20.0
    seed: int = 0
    filter: str = "direct"
    gating: str = "none"
    sigma_mode: str = "exact"
    sigma_p: tuple = (0.02, 0.02, 0.02)
    sigma_theta: tuple = (0.0875, 0.0875, 0.0875)
    fixed_sigma_p: tuple = (0.04, 0.04, 0.04)
    fixed_sigma_theta: tuple = (0.628, 0.628, 0.628)
    sigma_floor: float = 1e-6
    imu_rate: float = 200.0
    cam_rate: float = 20.0
    imu_sigma_acc: float = 0.02
    imu_sigma_gyro: float = 0.002
    imu_sigma_accel_bias: float = 5e-4
    imu_sigma_gyro_bias: float = 5e-5
    gravity: tuple = (0.0, 0.0, 9.81)
    fov_deg: float = 90.0
    max_range: float = 10.0
    chi2_alpha: float = 0.05
    aor_tau_p: float = 0.15
    aor_tau_theta: float = 0.35
    aorp_tau_p: float = 0.10
    aorp_tau_theta: float = 0.175
    match_w_p: float = 1.0
    match_w_theta: float = 1.0
    match_gate: float | None = None      # None: take the preset's gate
    divergence_bound: float = 10.0
    runs_per_cell: int = 100
    sweep_sigma_p: tuple = (0.01, 0.05, 0.1, 0.2, 0.3)
    sweep_sigma_theta: tuple = (0.0175, 0.0875, 0.175, 0.35)
    episodes: tuple | None = None        # None: take the preset's schedule
    episode_excess: float = 2.5

    def scenario(self) -> ScenarioPreset:
        return get_preset(self.preset)

    def trajectory(self) -> TrajectorySpec:
        traj = self.scenario().trajectory
        traj.duration = self.duration
        return traj

    def world(self) -> WorldSpec:
        return self.scenario().world

    def episode_schedule(self) -> list:
        if self.episodes is not None:
            flat = list(self.episodes)
            if len(flat) % 3 != 0:
                raise ConfigError("episodes must be (start, end, factor) triples")
            return [tuple(flat[i:i + 3]) for i in range(0, len(flat), 3)]
        return list(self.scenario().episodes)

    def sensor_spec(self, sigma_p=None, sigma_theta=None) -> SensorSpec:
        return SensorSpec(
            imu_rate=self.imu_rate,
            cam_rate=self.cam_rate,
            sigma_p=np.asarray(sigma_p if sigma_p is not None
                               else self.sigma_p, dtype=float),
            sigma_theta=np.asarray(sigma_theta if sigma_theta is not None
                                   else self.sigma_theta, dtype=float),
            mode=self.sigma_mode,
            fixed_sigma_p=np.asarray(self.fixed_sigma_p, dtype=float),
            fixed_sigma_theta=np.asarray(self.fixed_sigma_theta, dtype=float),
            episodes=self.episode_schedule(),
            episode_excess=self.episode_excess,
            sigma_floor=self.sigma_floor,
            fov_deg=self.fov_deg,
            max_range=self.max_range,
            extrinsics=camera_forward_extrinsics(),
        )

    def imu_noise(self) -> ImuNoise:
        return ImuNoise(self.imu_sigma_acc, self.imu_sigma_gyro,
                        self.imu_sigma_accel_bias, self.imu_sigma_gyro_bias,
                        np.asarray(self.gravity, dtype=float))

    def filter_setup(self) -> FilterSetup:
        gate = self.match_gate if self.match_gate is not None \
            else self.scenario().match_gate
        return FilterSetup(
            extrinsics=camera_forward_extrinsics(),
            imu_noise=self.imu_noise(),
            filter_type=self.filter,
            gating=GatingConfig(
                method=self.gating, chi2_alpha=self.chi2_alpha,
                aor_tau_p=self.aor_tau_p, aor_tau_theta=self.aor_tau_theta,
                aorp_tau_p=self.aorp_tau_p,
                aorp_tau_theta=self.aorp_tau_theta),
            matching=MatchConfig(self.match_w_p, self.match_w_theta, gate),
            divergence_bound=self.divergence_bound,
        )

    def validate(self):
        if self.filter not in ("direct", "inverse"):
            raise ConfigError(f"filter must be direct or inverse, got "
                              f"{self.filter!r}")
        if self.gating not in METHODS:
            raise ConfigError(f"gating must be one of {METHODS}, got "
                              f"{self.gating!r}")
        if self.sigma_mode not in SIGMA_MODES:
            raise ConfigError(f"sigma_mode must be one of {SIGMA_MODES}, got "
                              f"{self.sigma_mode!r}")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        self.scenario()  # raises on unknown preset
        try:
            self.filter_setup()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self


_TUPLE_FIELDS = {"sigma_p", "sigma_theta", "fixed_sigma_p",
                 "fixed_sigma_theta", "gravity", "sweep_sigma_p",
                 "sweep_sigma_theta", "episodes"}
_TRIPLE_FIELDS = {"sigma_p", "sigma_theta", "fixed_sigma_p",
                  "fixed_sigma_theta", "gravity"}
_STR_FIELDS = {"preset", "filter", "gating", "sigma_mode"}
_INT_FIELDS = {"seed", "runs_per_cell"}


def _parse_value(key: str, raw: str, line_no: int):
    raw = raw.strip()
    try:
        if key in _STR_FIELDS:
            return raw
        if key in _INT_FIELDS:
            return int(raw)
        if key in _TUPLE_FIELDS:
            parts = [p for p in raw.split(",") if p.strip()]
            vals = tuple(float(p) for p in parts)
            if key in _TRIPLE_FIELDS:
                if len(vals) == 1:
                    vals = vals * 3
                if len(vals) != 3:
                    raise ValueError("expected 1 or 3 values")
            return vals
        return float(raw)
    except ValueError as exc:
        raise ConfigError(
            f"line {line_no}: bad value for {key!r}: {raw!r} ({exc})") from None


def parse_config(path) -> RunConfig:
    """Parse a config file; unknown keys, bad values, or a missing/mismatched
    config_version are reported with the offending line and field name."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    version = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"line {line_no}: expected 'key = value', "
                                  f"got {text!r}")
            key, raw = (s.strip() for s in text.split("=", 1))
            if key == "config_version":
                try:
                    version = int(raw)
                except ValueError:
                    raise ConfigError(f"line {line_no}: config_version must "
                                      f"be an integer") from None
                continue
            if key not in known:
                raise ConfigError(f"line {line_no}: unknown field {key!r}")
            values[key] = _parse_value(key, raw, line_no)
    if version is None:
        raise ConfigError("missing required field 'config_version'")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config_version {version} not supported "
                          f"(expected {SCHEMA_VERSION})")
    if "preset" not in values:
        raise ConfigError("missing required field 'preset'")
    return RunConfig(**values).validate()


def write_config(path, cfg: RunConfig):
    """Write a config back out (used by the demos and tests)."""
    lines = [f"config_version = {SCHEMA_VERSION}"]
    for f in fields(RunConfig):
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if isinstance(val, tuple):
            lines.append(f"{f.name} = " + ", ".join(repr(v) for v in val))
        else:
            lines.append(f"{f.name} = {val}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
