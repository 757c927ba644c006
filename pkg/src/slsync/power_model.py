"""Closed-form average-power models for the sidelink sync methods, plus the
optimal listening window, the TX/RX-beacon break-even transmit power, and
battery-life projection.

These are the analytic oracles the discrete-event simulator is checked
against. Powers are double-precision watts; every duration enters as integer
nanoseconds and is converted once.

Method summary (per sync event, amortized over the event period):

* data-driven sender:   N_A * (P_TX*(t_SS + t_req) + P_RX*t_rsp) / T_data
* data-driven receiver: (P_RX * t_win/N_A + P_TX*t_rsp) / T_data
* UE syncing to an RX beacon: N_A * (P_TX*(t_SS + t_req) + P_RX*t_rsp) / T_sync
* UE syncing to a TX beacon:  N_A * P_RX * t_win / T_sync

The receiver's effective window shrinks as t_win/N_A because the sender's
multi-attempt sweep divides the timing uncertainty into N_A stripes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .timebase import NS_PER_MS, NS_PER_S, drift_contribution_ns, seconds

SECONDS_PER_DAY = 86_400.0

#: Reported battery life of the baseline (network-synchronized) protocol
#: stack under the reference MTC traffic model; used to calibrate the
#: baseline average power when only a lifetime figure is available.
DEFAULT_BASELINE_LIFE_DAYS = 328.3


@dataclass(frozen=True)
class RadioPowerProfile:
    """Radio power draw per state. Sleep power defaults to zero so simulated
    totals are directly comparable with the analytic formulas, which carry no
    sleep term.

    ``pa_efficiency`` and ``support_circuitry_w`` document how a conducted
    P_TX maps to regulatory ERP figures; no formula consumes them.
    """

    p_tx_w: float = 0.100
    p_rx_w: float = 0.080
    p_sleep_w: float = 0.0
    pa_efficiency: float = 0.45
    support_circuitry_w: float = 0.060

    def __post_init__(self) -> None:
        if self.p_tx_w < 0 or self.p_rx_w < 0 or self.p_sleep_w < 0:
            raise ConfigError("radio powers must be non-negative")
        if self.p_sleep_w > self.p_rx_w:
            raise ConfigError("sleep power must not exceed receive power")
        if not 0.0 < self.pa_efficiency <= 1.0:
            raise ConfigError("pa_efficiency must be in (0, 1]")


@dataclass(frozen=True)
class FlexiSyncParams:
    """Data-driven sync parameters: attempt budget, mean data inter-arrival,
    signal durations, and the single-attempt listening window."""

    n_attempts: int = 1
    t_data_ns: int = 2 * 3600 * NS_PER_S
    t_ss_ns: int = NS_PER_MS
    t_req_ns: int = NS_PER_MS
    t_rsp_ns: int = NS_PER_MS
    t_win_ns: int = 72 * NS_PER_MS

    def __post_init__(self) -> None:
        if self.n_attempts < 1:
            raise ConfigError("n_attempts must be >= 1")
        for name in ("t_data_ns", "t_ss_ns", "t_req_ns", "t_rsp_ns", "t_win_ns"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.t_win_ns < self.t_ss_ns:
            raise ConfigError("t_win must fit at least one sync signal")


@dataclass(frozen=True)
class BeaconParams:
    """Periodic-resync parameters for a UE synchronizing to a beacon."""

    t_sync_ns: int = 500 * NS_PER_S
    n_attempts: int = 1
    t_ss_ns: int = NS_PER_MS
    t_req_ns: int = NS_PER_MS
    t_rsp_ns: int = NS_PER_MS
    t_win_ns: int = 72 * NS_PER_MS

    def __post_init__(self) -> None:
        if self.t_sync_ns <= 0:
            raise ConfigError("t_sync must be positive")
        if self.n_attempts < 1:
            raise ConfigError("n_attempts must be >= 1")
        for name in ("t_ss_ns", "t_req_ns", "t_rsp_ns", "t_win_ns"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class PowerClass:
    """Unlicensed-band device class (regulatory transmit power and band)."""

    name: str
    erp_dbm: float
    band_mhz: tuple[float, float]
    region: str


PC1 = PowerClass("PC1", 14.0, (865.0, 868.0), "Europe")
PC2 = PowerClass("PC2", 23.0, (902.0, 928.0), "North America")
POWER_CLASSES = {"PC1": PC1, "PC2": PC2}


@dataclass(frozen=True)
class BatteryModel:
    """Battery capacity plus the baseline average power of the device
    excluding sync overhead. The default baseline is back-calculated from the
    reference lifetime at 5 Wh; the lifetime *ratio* with/without overhead is
    independent of capacity for a fixed baseline power."""

    capacity_wh: float = 5.0
    baseline_power_w: float = 5.0 * 3600.0 / (DEFAULT_BASELINE_LIFE_DAYS * SECONDS_PER_DAY)

    def __post_init__(self) -> None:
        if self.capacity_wh <= 0 or self.baseline_power_w <= 0:
            raise ConfigError("battery capacity and baseline power must be positive")

    @classmethod
    def calibrated(cls, capacity_wh: float, baseline_life_days: float) -> "BatteryModel":
        """Battery whose baseline power yields the given lifetime at the given
        capacity with zero sync overhead."""
        if capacity_wh <= 0 or baseline_life_days <= 0:
            raise ConfigError("capacity and baseline life must be positive")
        baseline = capacity_wh * 3600.0 / (baseline_life_days * SECONDS_PER_DAY)
        return cls(capacity_wh, baseline)


def p_src_flexi(profile: RadioPowerProfile, p: FlexiSyncParams) -> float:
    """Average sync power at the data sender: N_A attempts of sync signal plus
    timing request, each followed by a response listen, per data period."""
    per_attempt = profile.p_tx_w * seconds(p.t_ss_ns + p.t_req_ns) + profile.p_rx_w * seconds(
        p.t_rsp_ns
    )
    return p.n_attempts * per_attempt / seconds(p.t_data_ns)


def p_dst_flexi(profile: RadioPowerProfile, p: FlexiSyncParams) -> float:
    """Average sync power at the data receiver: one effective window
    (t_win / N_A) of listening plus one timing response per data period."""
    t_win_eff_s = seconds(p.t_win_ns) / p.n_attempts
    return (
        profile.p_rx_w * t_win_eff_s + profile.p_tx_w * seconds(p.t_rsp_ns)
    ) / seconds(p.t_data_ns)


def p_rx_beacon(profile: RadioPowerProfile, b: BeaconParams) -> float:
    """Average power in a UE that resynchronizes every t_sync by requesting
    timing from an always-listening (RX) beacon."""
    per_attempt = profile.p_tx_w * seconds(b.t_ss_ns + b.t_req_ns) + profile.p_rx_w * seconds(
        b.t_rsp_ns
    )
    return b.n_attempts * per_attempt / seconds(b.t_sync_ns)


def p_tx_beacon(profile: RadioPowerProfile, b: BeaconParams) -> float:
    """Average power in a UE that resynchronizes every t_sync by listening a
    window of t_win for a broadcasting (TX) beacon."""
    return b.n_attempts * profile.p_rx_w * seconds(b.t_win_ns) / seconds(b.t_sync_ns)


def optimal_window_ns(
    t_sync_ns: int,
    x_src_ppm: float,
    x_dst_ppm: float,
    eps_coarse_ns: int = 0,
    t_d_ns: int = 0,
) -> int:
    """Smallest listening window that still covers the full timing-error
    budget accumulated over one sync interval."""
    if t_sync_ns < 0:
        raise ConfigError("t_sync must be non-negative")
    return (
        eps_coarse_ns
        + drift_contribution_ns(x_src_ppm, t_sync_ns)
        + drift_contribution_ns(x_dst_ppm, t_sync_ns)
        + t_d_ns
    )


def beacon_power_threshold(p_rx_w: float, b: BeaconParams) -> tuple[float, bool]:
    """Transmit power at which the RX-beacon and TX-beacon methods cost the
    same: P_BTh = P_RX * (t_win - t_rsp) / (t_SS + t_req).

    Below the threshold the RX-beacon method is cheaper for the UE. Returns
    (threshold_w, clamped); a negative closed-form value (t_win < t_rsp) is
    clamped to zero with clamped=True.
    """
    denom_ns = b.t_ss_ns + b.t_req_ns
    if denom_ns <= 0:
        raise ConfigError("t_ss + t_req must be positive")
    value = p_rx_w * seconds(b.t_win_ns - b.t_rsp_ns) / seconds(denom_ns)
    if value < 0.0:
        return 0.0, True
    return value, False


def battery_life_days(battery: BatteryModel, sync_overhead_w: float) -> float:
    """Projected lifetime in days for baseline load plus sync overhead."""
    if sync_overhead_w < 0:
        raise ConfigError("sync overhead must be non-negative")
    total_w = battery.baseline_power_w + sync_overhead_w
    return battery.capacity_wh * 3600.0 / total_w / SECONDS_PER_DAY


__all__ = [
    "DEFAULT_BASELINE_LIFE_DAYS",
    "SECONDS_PER_DAY",
    "BatteryModel",
    "BeaconParams",
    "FlexiSyncParams",
    "PC1",
    "PC2",
    "POWER_CLASSES",
    "PowerClass",
    "RadioPowerProfile",
    "battery_life_days",
    "beacon_power_threshold",
    "optimal_window_ns",
    "p_dst_flexi",
    "p_rx_beacon",
    "p_src_flexi",
    "p_tx_beacon",
]
