"""Sidelink D2D synchronization toolkit.

Building blocks for studying rendezvous between duty-cycled radio devices
whose clocks drift apart: integer-nanosecond time and drifting clocks
(`timebase`), closed-form sync power models and battery projection
(`power_model`), pure protocol state machines for the device roles
(`protocol`), a deterministic discrete-event radio simulator (`netsim`),
canonical scenario builders (`scenarios`), JSON scenario configuration
(`config`), and a CLI (`slsync`).
"""

from .errors import ConfigError, ProtocolError, SlsyncError
from .power_model import (
    BatteryModel,
    BeaconParams,
    FlexiSyncParams,
    PowerClass,
    RadioPowerProfile,
    battery_life_days,
    beacon_power_threshold,
    optimal_window_ns,
    p_dst_flexi,
    p_rx_beacon,
    p_src_flexi,
    p_tx_beacon,
)
from .timebase import (
    DriftingClock,
    SyncBudget,
    SyncLevel,
    classify_sync,
    max_legacy_range_m,
    total_sync_error_ns,
)

__version__ = "0.1.0"

__all__ = [
    "BatteryModel",
    "BeaconParams",
    "ConfigError",
    "DriftingClock",
    "FlexiSyncParams",
    "PowerClass",
    "ProtocolError",
    "RadioPowerProfile",
    "SlsyncError",
    "SyncBudget",
    "SyncLevel",
    "battery_life_days",
    "beacon_power_threshold",
    "classify_sync",
    "max_legacy_range_m",
    "optimal_window_ns",
    "p_dst_flexi",
    "p_rx_beacon",
    "p_src_flexi",
    "p_tx_beacon",
    "total_sync_error_ns",
    "__version__",
]
