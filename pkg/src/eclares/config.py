"""Mission configuration files (INI-style sections) and experiment presets.

The config format is line-oriented and human-editable: one section per
subsystem, `key = value` entries. Unknown sections or keys are hard errors so
typos cannot silently fall back to defaults. Serializing a parsed config and
re-parsing it yields an identical configuration.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace

from eclares.ergodic import PtoConfig
from eclares.eware import EwareConfig
from eclares.grid import DomainSpec, SensorModel
from eclares.mission import EnvironmentConfig, MissionConfig
from eclares.quadrotor import BatteryParams, QuadrotorParams
from eclares.tracking import B2bConfig, TrackingConfig

__all__ = [
    "ConfigError",
    "parse_config",
    "parse_config_text",
    "serialize_config",
    "build_preset",
    "preset_names",
    "ExperimentPreset",
    "comparison_presets",
]


class ConfigError(ValueError):
    """Malformed or invalid mission configuration."""


# section -> key -> (type, default accessor description)
_SCHEMA = {
    "domain": ["length_x", "length_y", "cell_size"],
    "environment": [
        "background_noise", "patch_noise", "patch_count", "patch_radius",
        "measurement_noise", "initial_clarity", "target_ratio",
        "target_absolute", "value_scale", "footprint_radius",
    ],
    "vehicle": [
        "mass", "inertia_x", "inertia_y", "inertia_z", "arm_length",
        "yaw_torque_coeff", "gravity", "altitude",
    ],
    "battery": ["capacity", "efficiency", "discharge_gain"],
    "ergodic": [
        "horizon", "dt", "num_harmonics", "control_weight", "boundary_weight",
        "max_iterations", "epsilon",
    ],
    "tracking": [
        "horizon", "dt", "position_weight", "attitude_weight",
        "velocity_weight", "omega_weight", "control_weight", "max_rotor_thrust",
    ],
    "eware": [
        "enabled", "period", "b2b_horizon", "charger_x", "charger_y",
        "arrival_pos_tol", "arrival_vel_tol", "terminal_weight_scale",
        "soc_reserve",
    ],
    "mission": [
        "method", "duration", "seed", "recharge_dwell",
        "lawnmower_spacing", "lawnmower_speed", "snapshot_times",
    ],
}


def _get(section, key, cast, default=None):
    if key not in section:
        if default is not None:
            return default
        raise ConfigError(f"missing key '{key}' in section [{section.name}]")
    raw = section[key]
    try:
        if cast is bool:
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(
            f"invalid value for [{section.name}] {key}: {raw!r}") from exc


def parse_config(path) -> MissionConfig:
    """Read and validate a mission configuration file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


def parse_config_text(text: str) -> MissionConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc

    missing = [s for s in _SCHEMA if s not in parser]
    if missing:
        raise ConfigError(f"missing required section(s): {', '.join(missing)}")
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        for key in parser[name]:
            if key not in _SCHEMA[name]:
                raise ConfigError(f"unknown key '{key}' in section [{name}]")

    try:
        cfg = _build(parser)
        cfg.validate()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _build(parser) -> MissionConfig:
    dom = parser["domain"]
    domain = DomainSpec(
        (_get(dom, "length_x", float), _get(dom, "length_y", float)),
        _get(dom, "cell_size", float))

    env = parser["environment"]
    target_abs_raw = env.get("target_absolute", "none")
    target_absolute = None if target_abs_raw.lower() == "none" else float(target_abs_raw)
    environment = EnvironmentConfig(
        background_noise=_get(env, "background_noise", float),
        patch_noise=_get(env, "patch_noise", float),
        patch_count=_get(env, "patch_count", int),
        patch_radius=_get(env, "patch_radius", float),
        measurement_noise=_get(env, "measurement_noise", float),
        initial_clarity=_get(env, "initial_clarity", float),
        target_ratio=_get(env, "target_ratio", float),
        target_absolute=target_absolute,
        value_scale=_get(env, "value_scale", float),
    )
    sensor = SensorModel(_get(env, "footprint_radius", float))

    veh = parser["vehicle"]
    quad = QuadrotorParams(
        mass=_get(veh, "mass", float),
        inertia_diag=(
            _get(veh, "inertia_x", float),
            _get(veh, "inertia_y", float),
            _get(veh, "inertia_z", float),
        ),
        arm_length=_get(veh, "arm_length", float),
        yaw_torque_coeff=_get(veh, "yaw_torque_coeff", float),
        gravity=_get(veh, "gravity", float),
    )
    altitude = _get(veh, "altitude", float)

    bat = parser["battery"]
    battery = BatteryParams(
        capacity=_get(bat, "capacity", float),
        efficiency=_get(bat, "efficiency", float),
        discharge_gain=_get(bat, "discharge_gain", float),
    )

    erg = parser["ergodic"]
    pto = PtoConfig(
        horizon=_get(erg, "horizon", float),
        dt=_get(erg, "dt", float),
        num_harmonics=_get(erg, "num_harmonics", int),
        control_weight=_get(erg, "control_weight", float),
        boundary_weight=_get(erg, "boundary_weight", float),
        max_iterations=_get(erg, "max_iterations", int),
    )
    tisd_epsilon = _get(erg, "epsilon", float)

    trk = parser["tracking"]
    tracking = TrackingConfig(
        horizon=_get(trk, "horizon", float),
        dt=_get(trk, "dt", float),
        position_weight=_get(trk, "position_weight", float),
        attitude_weight=_get(trk, "attitude_weight", float),
        velocity_weight=_get(trk, "velocity_weight", float),
        omega_weight=_get(trk, "omega_weight", float),
        control_weight=_get(trk, "control_weight", float),
        max_rotor_thrust=_get(trk, "max_rotor_thrust", float),
    )

    ew = parser["eware"]
    b2b = B2bConfig(
        horizon=_get(ew, "b2b_horizon", float),
        charger_position=(
            _get(ew, "charger_x", float), _get(ew, "charger_y", float), altitude),
        arrival_pos_tol=_get(ew, "arrival_pos_tol", float),
        arrival_vel_tol=_get(ew, "arrival_vel_tol", float),
        terminal_weight_scale=_get(ew, "terminal_weight_scale", float),
    )
    eware = EwareConfig(
        period=_get(ew, "period", float),
        explore_horizon=tracking.horizon,
        soc_reserve=_get(ew, "soc_reserve", float),
    )
    eware_enabled = _get(ew, "enabled", bool)

    mis = parser["mission"]
    snapshot_raw = mis.get("snapshot_times", "").strip()
    snapshot_times = tuple(float(v) for v in snapshot_raw.split()) if snapshot_raw else ()
    return MissionConfig(
        domain=domain,
        environment=environment,
        sensor=sensor,
        quad=quad,
        battery=battery,
        pto=pto,
        tracking=tracking,
        b2b=b2b,
        eware=eware,
        eware_enabled=eware_enabled,
        method=_get(mis, "method", str),
        duration=_get(mis, "duration", float),
        seed=_get(mis, "seed", int),
        recharge_dwell=_get(mis, "recharge_dwell", float),
        altitude=altitude,
        tisd_epsilon=tisd_epsilon,
        lawnmower_spacing=_get(mis, "lawnmower_spacing", float),
        lawnmower_speed=_get(mis, "lawnmower_speed", float),
        snapshot_times=snapshot_times,
    )


def serialize_config(cfg: MissionConfig) -> str:
    """Write a MissionConfig back out in the config file format."""
    env = cfg.environment
    out = io.StringIO()

    def sec(name, pairs):
        out.write(f"[{name}]\n")
        for k, v in pairs:
            out.write(f"{k} = {v}\n")
        out.write("\n")

    sec("domain", [
        ("length_x", cfg.domain.lengths[0]),
        ("length_y", cfg.domain.lengths[1]),
        ("cell_size", cfg.domain.cell_size),
    ])
    sec("environment", [
        ("background_noise", env.background_noise),
        ("patch_noise", env.patch_noise),
        ("patch_count", env.patch_count),
        ("patch_radius", env.patch_radius),
        ("measurement_noise", env.measurement_noise),
        ("initial_clarity", env.initial_clarity),
        ("target_ratio", env.target_ratio),
        ("target_absolute", "none" if env.target_absolute is None else env.target_absolute),
        ("value_scale", env.value_scale),
        ("footprint_radius", cfg.sensor.footprint_radius),
    ])
    sec("vehicle", [
        ("mass", cfg.quad.mass),
        ("inertia_x", cfg.quad.inertia_diag[0]),
        ("inertia_y", cfg.quad.inertia_diag[1]),
        ("inertia_z", cfg.quad.inertia_diag[2]),
        ("arm_length", cfg.quad.arm_length),
        ("yaw_torque_coeff", cfg.quad.yaw_torque_coeff),
        ("gravity", cfg.quad.gravity),
        ("altitude", cfg.altitude),
    ])
    sec("battery", [
        ("capacity", cfg.battery.capacity),
        ("efficiency", cfg.battery.efficiency),
        ("discharge_gain", cfg.battery.discharge_gain),
    ])
    sec("ergodic", [
        ("horizon", cfg.pto.horizon),
        ("dt", cfg.pto.dt),
        ("num_harmonics", cfg.pto.num_harmonics),
        ("control_weight", cfg.pto.control_weight),
        ("boundary_weight", cfg.pto.boundary_weight),
        ("max_iterations", cfg.pto.max_iterations),
        ("epsilon", cfg.tisd_epsilon),
    ])
    sec("tracking", [
        ("horizon", cfg.tracking.horizon),
        ("dt", cfg.tracking.dt),
        ("position_weight", cfg.tracking.position_weight),
        ("attitude_weight", cfg.tracking.attitude_weight),
        ("velocity_weight", cfg.tracking.velocity_weight),
        ("omega_weight", cfg.tracking.omega_weight),
        ("control_weight", cfg.tracking.control_weight),
        ("max_rotor_thrust", cfg.tracking.max_rotor_thrust),
    ])
    sec("eware", [
        ("enabled", "true" if cfg.eware_enabled else "false"),
        ("period", cfg.eware.period),
        ("b2b_horizon", cfg.b2b.horizon),
        ("charger_x", cfg.b2b.charger_position[0]),
        ("charger_y", cfg.b2b.charger_position[1]),
        ("arrival_pos_tol", cfg.b2b.arrival_pos_tol),
        ("arrival_vel_tol", cfg.b2b.arrival_vel_tol),
        ("terminal_weight_scale", cfg.b2b.terminal_weight_scale),
        ("soc_reserve", cfg.eware.soc_reserve),
    ])
    sec("mission", [
        ("method", cfg.method),
        ("duration", cfg.duration),
        ("seed", cfg.seed),
        ("recharge_dwell", cfg.recharge_dwell),
        ("lawnmower_spacing", cfg.lawnmower_spacing),
        ("lawnmower_speed", cfg.lawnmower_speed),
        ("snapshot_times", " ".join(str(t) for t in cfg.snapshot_times)),
    ])
    return out.getvalue()


def _desk_base() -> MissionConfig:
    return MissionConfig()


def build_preset(name: str) -> MissionConfig:
    """Named single-run configurations."""
    if name == "desk-spatiostatic":
        cfg = _desk_base()
        cfg.environment = replace(cfg.environment, background_noise=0.0, patch_count=0)
        cfg.snapshot_times = (0.0, 150.0, 300.0)
        return cfg
    if name == "desk-stochastic":
        cfg = _desk_base()
        cfg.environment = replace(
            cfg.environment, background_noise=0.001, patch_noise=0.05,
            patch_count=3, patch_radius=0.35)
        cfg.snapshot_times = (0.0, 150.0, 300.0)
        return cfg
    if name == "desk-ablation":
        cfg = build_preset("desk-stochastic")
        cfg.eware_enabled = False
        cfg.duration = 150.0
        return cfg
    if name == "full-scale":
        cfg = _desk_base()
        cfg.domain = DomainSpec((20.0, 20.0), 0.2)
        cfg.environment = replace(
            cfg.environment, background_noise=0.001, patch_noise=0.05,
            patch_count=6, patch_radius=3.0)
        cfg.pto = replace(cfg.pto, horizon=30.0, num_harmonics=10, max_iterations=100)
        cfg.b2b = replace(cfg.b2b, horizon=10.0)
        cfg.sensor = SensorModel(1.0)
        cfg.duration = 780.0
        cfg.lawnmower_spacing = 2.0
        cfg.lawnmower_speed = 2.0
        cfg.battery = replace(cfg.battery, discharge_gain=0.0008)
        cfg.snapshot_times = (0.0, 210.0, 780.0)
        return cfg
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")


def preset_names():
    return ["desk-spatiostatic", "desk-stochastic", "desk-ablation", "full-scale"]


@dataclass(frozen=True)
class ExperimentPreset:
    """A comparison set: variants sharing domain, seed, and duration."""

    name: str
    base: str
    variants: tuple  # of (label, {attribute: value}) pairs


def comparison_presets() -> dict:
    return {
        "methods-static": ExperimentPreset(
            name="methods-static", base="desk-spatiostatic",
            variants=(
                ("clarity", {"method": "clarity_tisd"}),
                ("uniform", {"method": "uniform_tisd"}),
                ("lawnmower", {"method": "lawnmower"}),
            )),
        "methods-stochastic": ExperimentPreset(
            name="methods-stochastic", base="desk-stochastic",
            variants=(
                ("clarity", {"method": "clarity_tisd"}),
                ("uniform", {"method": "uniform_tisd"}),
                ("lawnmower", {"method": "lawnmower"}),
            )),
        "energy-filter": ExperimentPreset(
            name="energy-filter", base="desk-stochastic",
            variants=(
                ("filtered", {"eware_enabled": True}),
                ("unfiltered", {"eware_enabled": False}),
            )),
    }
