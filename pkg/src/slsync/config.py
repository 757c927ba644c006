"""Scenario configuration: a JSON tree with named defaults for every
evaluation parameter, strict unknown-key rejection, and exact round-trip
serialization.

Durations are written either as integer nanoseconds or as strings with a
unit (``"72ms"``, ``"2h"``, ``"4.69us"``); powers as watts or strings like
``"100mW"``. The canonical serialized form uses integer nanoseconds and
float watts so that parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Optional, Union

from .errors import ConfigError
from .netsim import ALL_LOST, CAPTURE
from .power_model import (
    BatteryModel,
    BeaconParams,
    FlexiSyncParams,
    RadioPowerProfile,
    optimal_window_ns,
)
from .scenarios import (
    BuiltScenario,
    coldstart_scenario,
    flexi_handshake_scenario,
    legacy_scenario,
    rx_beacon_scenario,
    tx_beacon_scenario,
)
from .timebase import NS_PER_MS, NS_PER_S

SYNC_METHODS = ("flexi_coarse", "flexi_coldstart", "tx_beacon", "rx_beacon", "legacy")

_DUR_UNITS_NS = {
    "ns": 1,
    "us": 1_000,
    "ms": 1_000_000,
    "s": 1_000_000_000,
    "min": 60 * 1_000_000_000,
    "h": 3_600 * 1_000_000_000,
}
_POW_UNITS_W = {"nW": Decimal("1e-9"), "uW": Decimal("1e-6"), "mW": Decimal("1e-3"), "W": Decimal(1)}

_DUR_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(ns|us|ms|s|min|h)\s*$")
_POW_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(nW|uW|mW|W)\s*$")


def parse_duration_ns(value: Union[int, str], where: str = "duration") -> int:
    """Integer nanoseconds from an int or a unit-suffixed string."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a duration, got a boolean")
    if isinstance(value, int):
        if value < 0:
            raise ConfigError(f"{where}: durations must be non-negative")
        return value
    if isinstance(value, str):
        m = _DUR_RE.match(value)
        if not m:
            raise ConfigError(f"{where}: cannot parse duration {value!r}")
        try:
            ns = Decimal(m.group(1)) * _DUR_UNITS_NS[m.group(2)]
        except InvalidOperation as exc:  # pragma: no cover - regex guards this
            raise ConfigError(f"{where}: bad duration number {value!r}") from exc
        if ns != ns.to_integral_value():
            raise ConfigError(f"{where}: {value!r} is not a whole number of nanoseconds")
        return int(ns)
    raise ConfigError(f"{where}: expected int ns or a duration string, got {type(value).__name__}")


def parse_power_w(value: Union[int, float, str], where: str = "power") -> float:
    """Watts from a number or a unit-suffixed string."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a power, got a boolean")
    if isinstance(value, (int, float)):
        if value < 0:
            raise ConfigError(f"{where}: powers must be non-negative")
        return float(value)
    if isinstance(value, str):
        m = _POW_RE.match(value)
        if not m:
            raise ConfigError(f"{where}: cannot parse power {value!r}")
        return float(Decimal(m.group(1)) * _POW_UNITS_W[m.group(2)])
    raise ConfigError(f"{where}: expected watts or a power string, got {type(value).__name__}")


@dataclass(frozen=True)
class MethodParams:
    """Every evaluation knob, with the standard settings as defaults:
    100 mW transmit and 80 mW receive power, 1 ms signals, a 72 ms window,
    2 h data inter-arrival, a 500 s sync interval, one attempt, a 1.28 s
    DRX cycle, a 4.69 us cyclic prefix, a 5 ms legacy window, and
    5 + 5 ppm crystal budgets."""

    p_tx_w: float = 0.100
    p_rx_w: float = 0.080
    p_sleep_w: float = 0.0
    t_ss_ns: int = NS_PER_MS
    t_req_ns: int = NS_PER_MS
    t_rsp_ns: int = NS_PER_MS
    t_win_ns: int = 72 * NS_PER_MS
    t_data_ns: int = 7_200 * NS_PER_S
    t_sync_ns: int = 500 * NS_PER_S
    n_attempts: int = 1
    sl_drx_cycle_ns: int = 1_280 * NS_PER_MS
    t_cp_ns: int = 4_690
    t_slsw_ns: int = 5 * NS_PER_MS
    x_src_ppm: float = 5.0
    x_dst_ppm: float = 5.0
    eps_coarse_ns: int = 0
    data_duration_ns: int = NS_PER_MS
    beacon_period_ns: int = 0  # 0 => derived from the window
    ranging: bool = False
    piggyback_req: bool = False
    pa_efficiency: float = 0.45
    support_circuitry_w: float = 0.060

    def profile(self) -> RadioPowerProfile:
        return RadioPowerProfile(self.p_tx_w, self.p_rx_w, self.p_sleep_w,
                                 self.pa_efficiency, self.support_circuitry_w)

    def flexi(self) -> FlexiSyncParams:
        return FlexiSyncParams(self.n_attempts, self.t_data_ns, self.t_ss_ns,
                               self.t_req_ns, self.t_rsp_ns, self.t_win_ns)

    def beacon(self, optimal_window: bool = True) -> BeaconParams:
        t_win = self.t_win_ns
        if optimal_window:
            t_win = max(
                optimal_window_ns(self.t_sync_ns, self.x_src_ppm, self.x_dst_ppm,
                                  self.eps_coarse_ns),
                self.t_ss_ns,
            )
        return BeaconParams(self.t_sync_ns, self.n_attempts, self.t_ss_ns,
                            self.t_req_ns, self.t_rsp_ns, t_win)


@dataclass(frozen=True)
class ChannelSettings:
    comm_range_m: float = 50_000.0
    collision_policy: str = ALL_LOST
    distance_m: float = 200.0

    def __post_init__(self) -> None:
        if self.collision_policy not in (ALL_LOST, CAPTURE):
            raise ConfigError(f"unknown collision policy {self.collision_policy!r}")


@dataclass(frozen=True)
class BatterySettings:
    """The default baseline power is back-calculated once from the reference
    lifetime at 5 Wh and then held fixed, so changing only the capacity
    scales both lifetimes and leaves their ratio untouched. Setting
    ``baseline_life_days`` instead recalibrates the power at the configured
    capacity."""

    capacity_wh: float = 5.0
    baseline_power_w: float = BatteryModel().baseline_power_w
    baseline_life_days: Optional[float] = None

    def model(self) -> BatteryModel:
        if self.baseline_life_days is not None:
            return BatteryModel.calibrated(self.capacity_wh, self.baseline_life_days)
        return BatteryModel(self.capacity_wh, self.baseline_power_w)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "default"
    sync_method: str = "flexi_coarse"
    seed: int = 0
    periods: int = 50
    horizon_ns: Optional[int] = None
    params: MethodParams = field(default_factory=MethodParams)
    battery: BatterySettings = field(default_factory=BatterySettings)
    channel: ChannelSettings = field(default_factory=ChannelSettings)

    def __post_init__(self) -> None:
        if self.sync_method not in SYNC_METHODS:
            raise ConfigError(
                f"unknown sync_method {self.sync_method!r}; expected one of {SYNC_METHODS}"
            )
        if self.periods < 1:
            raise ConfigError("periods must be >= 1")


_PARAM_KEYS = {
    "p_tx": ("p_tx_w", "power"),
    "p_rx": ("p_rx_w", "power"),
    "p_sleep": ("p_sleep_w", "power"),
    "t_ss": ("t_ss_ns", "duration"),
    "t_req": ("t_req_ns", "duration"),
    "t_rsp": ("t_rsp_ns", "duration"),
    "t_win": ("t_win_ns", "duration"),
    "t_data": ("t_data_ns", "duration"),
    "t_sync": ("t_sync_ns", "duration"),
    "n_attempts": ("n_attempts", "int"),
    "sl_drx_cycle": ("sl_drx_cycle_ns", "duration"),
    "t_cp": ("t_cp_ns", "duration"),
    "t_slsw": ("t_slsw_ns", "duration"),
    "x_src_ppm": ("x_src_ppm", "float"),
    "x_dst_ppm": ("x_dst_ppm", "float"),
    "eps_coarse": ("eps_coarse_ns", "duration"),
    "data_duration": ("data_duration_ns", "duration"),
    "beacon_period": ("beacon_period_ns", "duration"),
    "ranging": ("ranging", "bool"),
    "piggyback_req": ("piggyback_req", "bool"),
    "pa_efficiency": ("pa_efficiency", "float"),
    "support_circuitry": ("support_circuitry_w", "power"),
}

_CHANNEL_KEYS = {
    "comm_range_m": ("comm_range_m", "float"),
    "collision_policy": ("collision_policy", "str"),
    "distance_m": ("distance_m", "float"),
}

_BATTERY_KEYS = {
    "capacity_wh": ("capacity_wh", "float"),
    "baseline_power": ("baseline_power_w", "power"),
    "baseline_life_days": ("baseline_life_days", "float"),
}

_TOP_KEYS = {"name", "sync_method", "seed", "periods", "horizon", "params", "battery", "channel"}


def _coerce(kind: str, raw: Any, where: str) -> Any:
    if kind == "duration":
        return parse_duration_ns(raw, where)
    if kind == "power":
        return parse_power_w(raw, where)
    if kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{where}: expected an integer")
        return raw
    if kind == "float":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(raw)
    if kind == "bool":
        if not isinstance(raw, bool):
            raise ConfigError(f"{where}: expected true/false")
        return raw
    if kind == "str":
        if not isinstance(raw, str):
            raise ConfigError(f"{where}: expected a string")
        return raw
    raise AssertionError(kind)


def _parse_section(section: Any, keymap: dict, cls, where: str):
    if section is None:
        return cls()
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    kwargs = {}
    for key, raw in section.items():
        if key not in keymap:
            raise ConfigError(f"unknown key at {where}.{key}")
        fieldname, kind = keymap[key]
        kwargs[fieldname] = _coerce(kind, raw, f"{where}.{key}")
    return cls(**kwargs)


def parse_config(data: Union[str, dict, Path]) -> ScenarioConfig:
    """ScenarioConfig from a JSON string, a parsed dict, or a file path.
    Unknown keys are rejected with their path."""
    if isinstance(data, Path):
        try:
            data = data.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key at {key}")
    name = data.get("name", "default")
    if not isinstance(name, str):
        raise ConfigError("name: expected a string")
    method = data.get("sync_method", "flexi_coarse")
    if not isinstance(method, str):
        raise ConfigError("sync_method: expected a string")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed: expected an integer")
    periods = data.get("periods", 50)
    if isinstance(periods, bool) or not isinstance(periods, int):
        raise ConfigError("periods: expected an integer")
    horizon = data.get("horizon")
    horizon_ns = None if horizon is None else parse_duration_ns(horizon, "horizon")
    params = _parse_section(data.get("params"), _PARAM_KEYS, MethodParams, "params")
    battery = _parse_section(data.get("battery"), _BATTERY_KEYS, BatterySettings, "battery")
    channel = _parse_section(data.get("channel"), _CHANNEL_KEYS, ChannelSettings, "channel")
    return ScenarioConfig(name, method, seed, periods, horizon_ns, params, battery, channel)


def canonical_dict(cfg: ScenarioConfig) -> dict:
    """Plain-JSON form with integer nanoseconds and float watts."""
    p = cfg.params
    out: dict[str, Any] = {
        "name": cfg.name,
        "sync_method": cfg.sync_method,
        "seed": cfg.seed,
        "periods": cfg.periods,
        "params": {
            "p_tx": p.p_tx_w,
            "p_rx": p.p_rx_w,
            "p_sleep": p.p_sleep_w,
            "t_ss": p.t_ss_ns,
            "t_req": p.t_req_ns,
            "t_rsp": p.t_rsp_ns,
            "t_win": p.t_win_ns,
            "t_data": p.t_data_ns,
            "t_sync": p.t_sync_ns,
            "n_attempts": p.n_attempts,
            "sl_drx_cycle": p.sl_drx_cycle_ns,
            "t_cp": p.t_cp_ns,
            "t_slsw": p.t_slsw_ns,
            "x_src_ppm": p.x_src_ppm,
            "x_dst_ppm": p.x_dst_ppm,
            "eps_coarse": p.eps_coarse_ns,
            "data_duration": p.data_duration_ns,
            "beacon_period": p.beacon_period_ns,
            "ranging": p.ranging,
            "piggyback_req": p.piggyback_req,
            "pa_efficiency": p.pa_efficiency,
            "support_circuitry": p.support_circuitry_w,
        },
        "battery": {
            "capacity_wh": cfg.battery.capacity_wh,
            "baseline_power": cfg.battery.baseline_power_w,
            **(
                {"baseline_life_days": cfg.battery.baseline_life_days}
                if cfg.battery.baseline_life_days is not None
                else {}
            ),
        },
        "channel": {
            "comm_range_m": cfg.channel.comm_range_m,
            "collision_policy": cfg.channel.collision_policy,
            "distance_m": cfg.channel.distance_m,
        },
    }
    if cfg.horizon_ns is not None:
        out["horizon"] = cfg.horizon_ns
    return out


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(canonical_dict(cfg), indent=2, sort_keys=True) + "\n"


def build_scenario(cfg: ScenarioConfig) -> BuiltScenario:
    """Instantiate the simulation scenario for the configured sync method."""
    p = cfg.params
    ch = cfg.channel
    profile = p.profile()
    if cfg.sync_method == "flexi_coarse":
        built = flexi_handshake_scenario(
            profile=profile,
            n_attempts=p.n_attempts,
            t_ss_ns=p.t_ss_ns,
            t_req_ns=p.t_req_ns,
            t_rsp_ns=p.t_rsp_ns,
            t_win_ns=p.t_win_ns,
            t_data_ns=p.t_data_ns,
            cycle_ns=p.sl_drx_cycle_ns,
            periods=cfg.periods,
            distance_m=ch.distance_m,
            rel_drift_ppm=p.x_src_ppm + p.x_dst_ppm,
            data_duration_ns=p.data_duration_ns,
            ranging=p.ranging,
            comm_range_m=ch.comm_range_m,
            name=cfg.name,
        )
    elif cfg.sync_method == "flexi_coldstart":
        built = coldstart_scenario(
            profile=profile,
            cycle_ns=p.sl_drx_cycle_ns,
            t_win_ns=p.t_win_ns,
            t_ss_ns=p.t_ss_ns,
            t_req_ns=p.t_req_ns,
            t_rsp_ns=p.t_rsp_ns,
            distance_m=ch.distance_m,
            data_duration_ns=p.data_duration_ns,
            comm_range_m=ch.comm_range_m,
            name=cfg.name,
        )
    elif cfg.sync_method == "rx_beacon":
        built = rx_beacon_scenario(
            profile=profile,
            t_sync_ns=p.t_sync_ns,
            n_attempts=p.n_attempts,
            t_ss_ns=p.t_ss_ns,
            t_req_ns=p.t_req_ns,
            t_rsp_ns=p.t_rsp_ns,
            periods=cfg.periods,
            distance_m=ch.distance_m,
            comm_range_m=ch.comm_range_m,
            name=cfg.name,
        )
    elif cfg.sync_method == "tx_beacon":
        built = tx_beacon_scenario(
            profile=profile,
            t_sync_ns=p.t_sync_ns,
            n_attempts=p.n_attempts,
            t_win_ns=p.t_win_ns,
            beacon_period_ns=p.beacon_period_ns or None,
            t_ss_ns=p.t_ss_ns,
            periods=cfg.periods,
            distance_m=ch.distance_m,
            comm_range_m=ch.comm_range_m,
            name=cfg.name,
        )
    else:  # legacy
        built = legacy_scenario(
            profile=profile,
            distance_m=ch.distance_m,
            cycle_ns=p.sl_drx_cycle_ns,
            t_cp_ns=p.t_cp_ns,
            t_slsw_ns=p.t_slsw_ns,
            data_duration_ns=p.data_duration_ns,
            comm_range_m=ch.comm_range_m,
            name=cfg.name,
        )
    if cfg.horizon_ns is not None:
        built = replace(built, horizon_ns=cfg.horizon_ns)
    return built


__all__ = [
    "SYNC_METHODS",
    "BatterySettings",
    "ChannelSettings",
    "MethodParams",
    "ScenarioConfig",
    "build_scenario",
    "canonical_dict",
    "parse_config",
    "parse_duration_ns",
    "parse_power_w",
    "serialize_config",
]
