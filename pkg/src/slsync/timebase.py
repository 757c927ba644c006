"""Simulation time base: integer-nanosecond global time, per-device drifting
clocks, and the timing-error budget arithmetic used to size sync windows.

All interfaces exchange integer nanoseconds (``int``), never floating-point
seconds. Python integers are arbitrary precision, so the overflow policy is
simply "cannot overflow"; invalid (negative) times are rejected where a
contract requires non-negative values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

SPEED_OF_LIGHT_M_PER_S = 299_792_458


def ns_from_ms(ms: int) -> int:
    return ms * NS_PER_MS


def ns_from_s(s: int) -> int:
    return s * NS_PER_S


def seconds(ns: int) -> float:
    """Duration in seconds (float) from integer nanoseconds."""
    return ns / 1e9


def drift_contribution_ns(drift_ppm: float, elapsed_ns: int) -> int:
    """Clock-error growth over `elapsed_ns` for a skew of `drift_ppm`,
    truncated toward zero to whole nanoseconds."""
    return int(drift_ppm * elapsed_ns / 1e6)


class SyncLevel(enum.Enum):
    FINE = "fine"
    COARSE = "coarse"
    OUT_OF_SYNC = "out_of_sync"


def classify_sync(delta_sync_ns: int, t_cp_ns: int, t_slsw_ns: int) -> SyncLevel:
    """Classify a (non-negative) timing misalignment against the cyclic-prefix
    and legacy-sync-window bounds.

    Fine: delta < t_cp. Coarse: t_cp <= delta <= t_slsw. Otherwise out of sync.
    Callers pass the absolute misalignment.
    """
    if t_cp_ns > t_slsw_ns:
        raise ConfigError(f"t_cp ({t_cp_ns} ns) must not exceed t_slsw ({t_slsw_ns} ns)")
    if delta_sync_ns < 0:
        raise ConfigError("delta_sync must be non-negative (pass |delta|)")
    if delta_sync_ns < t_cp_ns:
        return SyncLevel.FINE
    if delta_sync_ns <= t_slsw_ns:
        return SyncLevel.COARSE
    return SyncLevel.OUT_OF_SYNC


def max_legacy_range_m(t_cp_ns: int) -> float:
    """Largest one-way distance whose time of flight fits inside the cyclic
    prefix, i.e. the range limit of timing-agnostic operation."""
    if t_cp_ns < 0:
        raise ConfigError("t_cp must be non-negative")
    return SPEED_OF_LIGHT_M_PER_S * t_cp_ns / 1e9


def flight_time_ns(distance_m: float) -> int:
    """One-way propagation delay, rounded to the nearest nanosecond."""
    if distance_m < 0:
        raise ConfigError("distance must be non-negative")
    return round(distance_m / SPEED_OF_LIGHT_M_PER_S * 1e9)


@dataclass(frozen=True)
class DriftingClock:
    """A device's local clock: a fixed offset plus linear drift, both relative
    to true (global) simulation time.

    local_time(t) = t + offset_ns + drift_ppm * (t - last_sync_ns) * 1e-6,
    truncated toward zero to whole nanoseconds. ``resync`` models a sync event
    that rebases the offset and restarts drift accumulation.
    """

    offset_ns: int = 0
    drift_ppm: float = 0.0
    last_sync_ns: int = 0

    def __post_init__(self) -> None:
        if abs(self.drift_ppm) >= 1e6:
            raise ConfigError("|drift_ppm| must be below 1e6 for a monotone clock")

    def local_time(self, now_ns: int) -> int:
        return now_ns + self.offset_ns + drift_contribution_ns(
            self.drift_ppm, now_ns - self.last_sync_ns
        )

    def offset_at(self, now_ns: int) -> int:
        """Current total offset: local_time(now) - now."""
        return self.local_time(now_ns) - now_ns

    def resync(self, now_ns: int, new_offset_ns: int) -> "DriftingClock":
        """Rebase the clock so that local_time(now) - now == new_offset_ns."""
        return DriftingClock(new_offset_ns, self.drift_ppm, now_ns)

    def adjust(self, now_ns: int, delta_ns: int) -> "DriftingClock":
        """Shift the local clock by delta_ns at instant now (a resync that
        preserves the drift rate)."""
        return self.resync(now_ns, self.offset_at(now_ns) + delta_ns)

    def global_for_local(self, local_ns: int) -> int:
        """Smallest global t with local_time(t) >= local_ns.

        Used to convert device-scheduled instants back to the global event
        timeline; exact despite truncation because local_time is monotone
        nondecreasing for |drift| < 1e6 ppm.
        """
        x = self.drift_ppm * 1e-6
        guess = self.last_sync_ns + (local_ns - self.offset_ns - self.last_sync_ns) / (1.0 + x)
        t = int(guess)
        # float guess is within a few ns; walk to the exact boundary
        for _ in range(64):
            if self.local_time(t) >= local_ns:
                if self.local_time(t - 1) < local_ns:
                    return t
                t -= 1
            else:
                t += 1
        raise ArithmeticError("global_for_local failed to converge")


@dataclass(frozen=True)
class SyncBudget:
    """Inputs to the total timing-error budget between a sender and receiver:
    residual error of the coarse sync source, both crystals' drift over the
    time since the last coarse sync, and the propagation delay."""

    eps_coarse_ns: int = 0
    x_src_ppm: float = 0.0
    x_dst_ppm: float = 0.0
    t_coarse_ns: int = 0
    t_d_ns: int = 0
    t_cp_ns: int = 4_690
    t_slsw_ns: int = 5 * NS_PER_MS

    def __post_init__(self) -> None:
        for name in ("eps_coarse_ns", "t_coarse_ns", "t_d_ns", "t_cp_ns", "t_slsw_ns"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.x_src_ppm < 0 or self.x_dst_ppm < 0:
            raise ConfigError("crystal inaccuracies must be non-negative")
        if self.t_cp_ns > self.t_slsw_ns:
            raise ConfigError("t_cp must not exceed t_slsw")


def total_sync_error_ns(budget: SyncBudget) -> int:
    """Worst-case misalignment a receiver window must absorb: coarse-source
    error plus both clocks' accumulated drift plus time of flight."""
    return (
        budget.eps_coarse_ns
        + drift_contribution_ns(budget.x_src_ppm, budget.t_coarse_ns)
        + drift_contribution_ns(budget.x_dst_ppm, budget.t_coarse_ns)
        + budget.t_d_ns
    )


def delta_sync_ns(a: DriftingClock, b: DriftingClock, now_ns: int) -> int:
    """Absolute local-time disagreement between two clocks at instant now."""
    return abs(a.local_time(now_ns) - b.local_time(now_ns))


def ceil_div(a: int, b: int) -> int:
    if b <= 0:
        raise ConfigError("divisor must be positive")
    return -(-a // b)


__all__ = [
    "NS_PER_US",
    "NS_PER_MS",
    "NS_PER_S",
    "SPEED_OF_LIGHT_M_PER_S",
    "DriftingClock",
    "SyncBudget",
    "SyncLevel",
    "classify_sync",
    "ceil_div",
    "delta_sync_ns",
    "drift_contribution_ns",
    "flight_time_ns",
    "max_legacy_range_m",
    "ns_from_ms",
    "ns_from_s",
    "seconds",
    "total_sync_error_ns",
]
