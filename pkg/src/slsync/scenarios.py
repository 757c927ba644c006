"""Canonical scenario builders for the five sync methods.

Each builder returns a fully deterministic :class:`~slsync.netsim.Scenario`
plus the horizon and, where meaningful, the closed-form power values the
simulated sync overhead should converge to.

The rendezvous builders provision the worst case the power formulas
describe: traffic epochs are known to both endpoints (periodic data with a
shared schedule), the receiver's clock error at each rendezvous fills the
whole provisioned uncertainty, and the sweep therefore succeeds on exactly
the configured last attempt. That makes the simulated ledger match the
analytic expressions rather than a luckier average case.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .netsim import ALL_LOST, ChannelModel, Flow, Scenario
from .power_model import (
    BeaconParams,
    FlexiSyncParams,
    RadioPowerProfile,
    p_dst_flexi,
    p_rx_beacon,
    p_src_flexi,
    p_tx_beacon,
)
from .protocol import (
    PO_LEN_NS,
    DeviceConfig,
    FlexiDstConfig,
    FlexiSrcConfig,
    RxBeaconConfig,
    TxBeaconConfig,
    next_sl_po,
)
from .timebase import NS_PER_MS, ceil_div, flight_time_ns

SRC_ID = 0
DST_ID = 1


@dataclass(frozen=True)
class BuiltScenario:
    scenario: Scenario
    horizon_ns: int
    src_id: int
    dst_id: int
    expected_src_w: float | None = None
    expected_dst_w: float | None = None


def _channel(distance_m: float, comm_range_m: float,
             policy: str = ALL_LOST) -> ChannelModel:
    return ChannelModel(
        positions_m={SRC_ID: (0.0, 0.0), DST_ID: (distance_m, 0.0)},
        comm_range_m=comm_range_m,
        collision_policy=policy,
    )


def _mid_phase_imsi(cycle_ns: int) -> int:
    """Identity whose paging occasion sits half a cycle into the grid, so
    epoch-plus-guard instants stay far from occasion boundaries."""
    return (cycle_ns // PO_LEN_NS) // 2


def flexi_handshake_scenario(
    *,
    profile: RadioPowerProfile = RadioPowerProfile(),
    n_attempts: int = 1,
    t_ss_ns: int = NS_PER_MS,
    t_req_ns: int = NS_PER_MS,
    t_rsp_ns: int = NS_PER_MS,
    t_win_ns: int = 72 * NS_PER_MS,
    t_data_ns: int = 7_200 * 1_000_000_000,
    cycle_ns: int = 1_280 * NS_PER_MS,
    periods: int = 50,
    distance_m: float = 200.0,
    rel_drift_ppm: float = 10.0,
    data_duration_ns: int = NS_PER_MS,
    ranging: bool = False,
    comm_range_m: float = 50_000.0,
    name: str = "flexi_coarse",
) -> BuiltScenario:
    """Data-driven multi-attempt resync between one sender and one receiver.

    The receiver carries the whole relative drift; over each data period it
    accumulates exactly the provisioned error, so every rendezvous needs the
    full configured attempt count and the receiver's window is occupied for
    its full effective length: the simulated sync overhead equals the
    closed-form sender/receiver powers.
    """
    if t_win_ns % n_attempts != 0:
        raise ConfigError("t_win must divide evenly into n_attempts stripes")
    win = t_win_ns // n_attempts
    air = t_ss_ns + t_req_ns + t_rsp_ns
    if win < max(PO_LEN_NS, air + 200_000):
        raise ConfigError("per-attempt window too small for the signal exchange")
    if t_data_ns % cycle_ns != 0 or t_data_ns < 4 * cycle_ns:
        raise ConfigError("t_data must be a multiple of (and at least 4x) the DRX cycle")
    t_d = flight_time_ns(distance_m)
    drift_budget = int(rel_drift_ppm * 1e-6 * t_data_ns) + t_d
    if drift_budget + t_win_ns > cycle_ns // 2 - PO_LEN_NS:
        raise ConfigError("accumulated error plus window must fit well inside a cycle")

    imsi_dst = _mid_phase_imsi(cycle_ns)
    imsi_src = imsi_dst + 7
    arm_guard = cycle_ns

    # Steady-state receiver offset at each armed window (senders's frame is
    # global). A resync happens at the sync-signal decode, t_req before the
    # window end; the next window opens one data period later.
    o_post = -t_d if not ranging else 0
    elapsed = t_data_ns - win + t_req_ns
    o_w = o_post - rel_drift_ppm * 1e-6 * elapsed
    # first armed window position, receiver-local
    p1 = next_sl_po(imsi_dst, cycle_ns, 0 + arm_guard).start_ns
    align_off = int(round(0.5 * (win - PO_LEN_NS)))
    lw1 = p1 - align_off
    o0 = int(round(o_w + rel_drift_ppm * 1e-6 * (lw1 - o_w)))
    o_w_int = int(round(o_w))

    # place the last attempt so the signal pair ends at the window's end
    w_end_global = (lw1 + win) - o_w_int
    s_last = w_end_global - t_ss_ns - t_req_ns - t_d
    sweep_lo = s_last - (n_attempts - 1) * win - (p1 + PO_LEN_NS // 2)

    src_cfg = FlexiSrcConfig(
        device_id=SRC_ID,
        peer_id=DST_ID,
        peer_imsi=imsi_dst,
        peer_cycle_ns=cycle_ns,
        mode="handshake",
        t_ss_ns=t_ss_ns,
        t_req_ns=t_req_ns,
        t_rsp_ns=t_rsp_ns,
        n_attempts=n_attempts,
        sweep_step_ns=win,
        sweep_lo_ns=sweep_lo,
        sweep_anchor="po",
        data_duration_ns=data_duration_ns,
        arm_guard_ns=arm_guard,
        data_guard_ns=5 * NS_PER_MS,
        fine_validity_ns=0,
        ranging=ranging,
        known_flight_ns=t_d,
    )
    dst_cfg = FlexiDstConfig(
        device_id=DST_ID,
        own_imsi=imsi_dst,
        cycle_ns=cycle_ns,
        ssw_mode="per_data",
        ssw_len_ns=win,
        t_rsp_ns=t_rsp_ns,
        arm_guard_ns=arm_guard,
        ranging=ranging,
    )
    devices = (
        DeviceConfig(SRC_ID, imsi_src, src_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns, position_m=(0.0, 0.0)),
        DeviceConfig(DST_ID, imsi_dst, dst_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns, drift_ppm=-rel_drift_ppm,
                     initial_offset_ns=o0, position_m=(distance_m, 0.0)),
    )
    flows = (Flow(SRC_ID, DST_ID, first_at_ns=0, period_ns=t_data_ns,
                  count=periods, kind="data", arm_dst=True),)
    horizon = periods * t_data_ns
    params = FlexiSyncParams(n_attempts, t_data_ns, t_ss_ns, t_req_ns, t_rsp_ns, t_win_ns)
    return BuiltScenario(
        Scenario(devices, flows, _channel(distance_m, comm_range_m), name),
        horizon,
        SRC_ID,
        DST_ID,
        expected_src_w=p_src_flexi(profile, params),
        expected_dst_w=p_dst_flexi(profile, params),
    )


def coldstart_scenario(
    *,
    profile: RadioPowerProfile = RadioPowerProfile(),
    cycle_ns: int = 1_280 * NS_PER_MS,
    t_win_ns: int = 72 * NS_PER_MS,
    t_ss_ns: int = NS_PER_MS,
    t_req_ns: int = NS_PER_MS,
    t_rsp_ns: int = NS_PER_MS,
    distance_m: float = 10.0,
    data_duration_ns: int = NS_PER_MS,
    comm_range_m: float = 50_000.0,
    name: str = "flexi_coldstart",
) -> BuiltScenario:
    """No prior timing at all: the sender sweeps candidate offsets stepped by
    the window length until one lands in the receiver's (uniformly random)
    always-on sync window. Coverage is guaranteed within
    ceil(cycle / t_win) attempts."""
    max_attempts = ceil_div(cycle_ns, t_win_ns)
    # the receiver's standing windows must already be open when the sweep
    # begins, or early attempts are lost regardless of phase
    first_at = 2 * cycle_ns + 100 * NS_PER_MS
    src_cfg = FlexiSrcConfig(
        device_id=SRC_ID,
        peer_id=DST_ID,
        peer_imsi=_mid_phase_imsi(cycle_ns),
        peer_cycle_ns=cycle_ns,
        mode="handshake",
        t_ss_ns=t_ss_ns,
        t_req_ns=t_req_ns,
        t_rsp_ns=t_rsp_ns,
        n_attempts=max_attempts,
        sweep_step_ns=t_win_ns,
        sweep_anchor="now",
        arm_guard_ns=10 * NS_PER_MS,
        data_guard_ns=5 * NS_PER_MS,
        data_duration_ns=data_duration_ns,
        fine_validity_ns=0,
        broadcast_slss=True,
    )
    dst_cfg = FlexiDstConfig(
        device_id=DST_ID,
        own_imsi=_mid_phase_imsi(cycle_ns),
        cycle_ns=cycle_ns,
        ssw_mode="always",
        ssw_len_ns=t_win_ns,
        t_rsp_ns=t_rsp_ns,
    )
    devices = (
        DeviceConfig(SRC_ID, _mid_phase_imsi(cycle_ns) + 7, src_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns),
        DeviceConfig(DST_ID, _mid_phase_imsi(cycle_ns), dst_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns,
                     initial_offset_ns=(0, cycle_ns - 1),
                     position_m=(distance_m, 0.0)),
    )
    flows = (Flow(SRC_ID, DST_ID, first_at_ns=first_at, kind="data"),)
    horizon = first_at + (max_attempts + 1) * t_win_ns + 4 * cycle_ns
    return BuiltScenario(
        Scenario(devices, flows, _channel(distance_m, comm_range_m), name),
        horizon,
        SRC_ID,
        DST_ID,
    )


def rx_beacon_scenario(
    *,
    profile: RadioPowerProfile = RadioPowerProfile(),
    t_sync_ns: int = 500 * 1_000_000_000,
    n_attempts: int = 1,
    t_ss_ns: int = NS_PER_MS,
    t_req_ns: int = NS_PER_MS,
    t_rsp_ns: int = NS_PER_MS,
    periods: int = 50,
    distance_m: float = 50.0,
    comm_range_m: float = 50_000.0,
    name: str = "rx_beacon",
) -> BuiltScenario:
    """A UE resynchronizes every sync interval by requesting timing from a
    persistently listening beacon. The beacon's primary-RAT busy intervals
    blank the first n_attempts - 1 requests of every round, so the UE pays
    for exactly the provisioned attempt count."""
    arm_guard = NS_PER_MS
    slack = 100_000
    step = t_ss_ns + t_req_ns + t_rsp_ns + slack + 500_000
    round_span = arm_guard + n_attempts * step + NS_PER_MS
    if t_sync_ns <= round_span:
        raise ConfigError("sync interval too short for the attempt schedule")
    t_d = flight_time_ns(distance_m)
    busy = []
    for j in range(periods):
        epoch = j * t_sync_ns
        for k in range(n_attempts - 1):
            a = epoch + arm_guard + k * step + t_d
            busy.append((a - 2_000, a + t_ss_ns + t_req_ns + 2_000))
    ue_cfg = FlexiSrcConfig(
        device_id=SRC_ID,
        peer_id=DST_ID,
        peer_imsi=17,
        peer_cycle_ns=1_280 * NS_PER_MS,
        mode="handshake",
        t_ss_ns=t_ss_ns,
        t_req_ns=t_req_ns,
        t_rsp_ns=t_rsp_ns,
        n_attempts=n_attempts,
        sweep_step_ns=step,
        sweep_anchor="now",
        arm_guard_ns=arm_guard,
        attempt_slack_ns=slack,
        data_duration_ns=0,
        fine_validity_ns=0,
        broadcast_slss=True,
        resync_from_rsp=True,
    )
    beacon_cfg = RxBeaconConfig(device_id=DST_ID, t_rsp_ns=t_rsp_ns)
    devices = (
        DeviceConfig(SRC_ID, 3, ue_cfg, radio=profile),
        DeviceConfig(DST_ID, 17, beacon_cfg, radio=profile,
                     position_m=(distance_m, 0.0), busy_ns=tuple(busy)),
    )
    flows = (Flow(SRC_ID, DST_ID, first_at_ns=0, period_ns=t_sync_ns,
                  count=periods, kind="resync"),)
    horizon = periods * t_sync_ns
    params = BeaconParams(t_sync_ns, n_attempts, t_ss_ns, t_req_ns, t_rsp_ns)
    return BuiltScenario(
        Scenario(devices, flows, _channel(distance_m, comm_range_m), name),
        horizon,
        SRC_ID,
        DST_ID,
        expected_src_w=p_rx_beacon(profile, params),
    )


def tx_beacon_scenario(
    *,
    profile: RadioPowerProfile = RadioPowerProfile(),
    t_sync_ns: int = 500 * 1_000_000_000,
    n_attempts: int = 1,
    t_win_ns: int = 5 * NS_PER_MS,
    beacon_period_ns: int | None = None,
    t_ss_ns: int = NS_PER_MS,
    periods: int = 50,
    distance_m: float = 50.0,
    comm_range_m: float = 50_000.0,
    name: str = "tx_beacon",
) -> BuiltScenario:
    """A UE opens a listening window every sync interval to catch a
    broadcasting beacon. The beacon period is at most t_win - t_ss, so any
    window position contains a whole sync signal; gated rounds bill the
    provisioned number of windows."""
    if beacon_period_ns is None:
        beacon_period_ns = t_win_ns - t_ss_ns - NS_PER_MS
    if beacon_period_ns <= 0 or beacon_period_ns > t_win_ns - t_ss_ns:
        raise ConfigError("beacon period must fit inside the listening window")
    retry_gap = NS_PER_MS
    span = n_attempts * (t_win_ns + retry_gap)
    if t_sync_ns <= span + NS_PER_MS:
        raise ConfigError("sync interval too short for the scan schedule")
    t_d = flight_time_ns(distance_m)
    margin = 200_000
    busy = []
    for j in range(periods):
        for k in range(n_attempts - 1):
            w0 = j * t_sync_ns + k * (t_win_ns + retry_gap) + t_d
            busy.append((w0 - t_ss_ns - margin, w0 + t_win_ns + margin))
    ue_cfg = FlexiDstConfig(
        device_id=SRC_ID,
        own_imsi=3,
        cycle_ns=1_280 * NS_PER_MS,
        ssw_mode="periodic",
        ssw_len_ns=t_win_ns,
        po_duty=False,
        period_ns=t_sync_ns,
        scan_retry_gap_ns=retry_gap,
        scan_max_attempts=n_attempts,
        first_round_local_ns=0,
    )
    beacon_cfg = TxBeaconConfig(device_id=DST_ID, period_ns=beacon_period_ns,
                                t_ss_ns=t_ss_ns, first_at_local_ns=0)
    devices = (
        DeviceConfig(SRC_ID, 3, ue_cfg, radio=profile),
        DeviceConfig(DST_ID, 17, beacon_cfg, radio=profile,
                     position_m=(distance_m, 0.0), busy_ns=tuple(busy)),
    )
    horizon = periods * t_sync_ns
    params = BeaconParams(t_sync_ns, n_attempts, t_ss_ns, NS_PER_MS, NS_PER_MS, t_win_ns)
    return BuiltScenario(
        Scenario(devices, (), _channel(distance_m, comm_range_m), name),
        horizon,
        SRC_ID,
        DST_ID,
        expected_src_w=p_tx_beacon(profile, params),
    )


def legacy_scenario(
    *,
    profile: RadioPowerProfile = RadioPowerProfile(),
    distance_m: float = 2_000.0,
    cycle_ns: int = 1_280 * NS_PER_MS,
    t_cp_ns: int = 4_690,
    t_slsw_ns: int = 5 * NS_PER_MS,
    offset_jitter_ns: int = 500,
    data_duration_ns: int = NS_PER_MS,
    comm_range_m: float = 50_000.0,
    name: str = "legacy",
) -> BuiltScenario:
    """Timing-agnostic operation: network-synchronized clocks, data sent
    directly on the receiver's paging occasion with no sync signal. Succeeds
    only while the time of flight stays inside the cyclic prefix."""
    imsi_dst = _mid_phase_imsi(cycle_ns)
    src_cfg = FlexiSrcConfig(
        device_id=SRC_ID,
        peer_id=DST_ID,
        peer_imsi=imsi_dst,
        peer_cycle_ns=cycle_ns,
        mode="direct",
        data_duration_ns=data_duration_ns,
        data_guard_ns=cycle_ns,
    )
    dst_cfg = FlexiDstConfig(
        device_id=DST_ID,
        own_imsi=imsi_dst,
        cycle_ns=cycle_ns,
        ssw_mode="off",
        t_cp_ns=t_cp_ns,
        t_slsw_ns=t_slsw_ns,
    )
    devices = (
        DeviceConfig(SRC_ID, imsi_dst + 7, src_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns,
                     initial_offset_ns=(-offset_jitter_ns, offset_jitter_ns)),
        DeviceConfig(DST_ID, imsi_dst, dst_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns,
                     initial_offset_ns=(-offset_jitter_ns, offset_jitter_ns),
                     position_m=(distance_m, 0.0)),
    )
    flows = (Flow(SRC_ID, DST_ID, first_at_ns=0, kind="data"),)
    horizon = 4 * cycle_ns
    return BuiltScenario(
        Scenario(devices, flows, _channel(distance_m, comm_range_m), name),
        horizon,
        SRC_ID,
        DST_ID,
    )


def flexi_range_scenario(
    *,
    profile: RadioPowerProfile = RadioPowerProfile(),
    distance_m: float = 2_000.0,
    cycle_ns: int = 1_280 * NS_PER_MS,
    t_win_ns: int = 5 * NS_PER_MS,
    t_ss_ns: int = NS_PER_MS,
    t_req_ns: int = NS_PER_MS,
    t_rsp_ns: int = NS_PER_MS,
    t_cp_ns: int = 4_690,
    t_slsw_ns: int = 5 * NS_PER_MS,
    offset_jitter_ns: int = 500,
    ranging: bool = True,
    data_duration_ns: int = NS_PER_MS,
    comm_range_m: float = 50_000.0,
    name: str = "flexi_range",
) -> BuiltScenario:
    """Single-attempt data-driven sync at arbitrary distance: the sync window
    absorbs the full error budget including time of flight, so the rendezvous
    succeeds where timing-agnostic operation cannot."""
    t_d = flight_time_ns(distance_m)
    if t_win_ns < t_ss_ns + t_req_ns + 2 * (offset_jitter_ns + 10_000):
        raise ConfigError("window too small for the jitter budget")
    imsi_dst = _mid_phase_imsi(cycle_ns)
    air = t_ss_ns + t_req_ns + t_rsp_ns
    # aim the signal pair at the window center for any drawn offset
    sweep_lo = -(t_ss_ns + t_req_ns) // 2 - t_d
    src_cfg = FlexiSrcConfig(
        device_id=SRC_ID,
        peer_id=DST_ID,
        peer_imsi=imsi_dst,
        peer_cycle_ns=cycle_ns,
        mode="handshake",
        t_ss_ns=t_ss_ns,
        t_req_ns=t_req_ns,
        t_rsp_ns=t_rsp_ns,
        n_attempts=1,
        sweep_step_ns=air + 200_000 + NS_PER_MS,
        sweep_lo_ns=sweep_lo,
        sweep_anchor="po",
        data_duration_ns=data_duration_ns,
        arm_guard_ns=cycle_ns,
        data_guard_ns=5 * NS_PER_MS,
        fine_validity_ns=0,
        ranging=ranging,
        known_flight_ns=t_d,
    )
    dst_cfg = FlexiDstConfig(
        device_id=DST_ID,
        own_imsi=imsi_dst,
        cycle_ns=cycle_ns,
        ssw_mode="per_data",
        ssw_len_ns=t_win_ns,
        t_rsp_ns=t_rsp_ns,
        t_cp_ns=t_cp_ns,
        t_slsw_ns=t_slsw_ns,
        arm_guard_ns=cycle_ns,
        ranging=ranging,
    )
    devices = (
        DeviceConfig(SRC_ID, imsi_dst + 7, src_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns,
                     initial_offset_ns=(-offset_jitter_ns, offset_jitter_ns)),
        DeviceConfig(DST_ID, imsi_dst, dst_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns,
                     initial_offset_ns=(-offset_jitter_ns, offset_jitter_ns),
                     position_m=(distance_m, 0.0)),
    )
    flows = (Flow(SRC_ID, DST_ID, first_at_ns=0, kind="data", arm_dst=True),)
    horizon = 5 * cycle_ns
    return BuiltScenario(
        Scenario(devices, flows, _channel(distance_m, comm_range_m), name),
        horizon,
        SRC_ID,
        DST_ID,
    )


def fine_fast_path_scenario(
    *,
    profile: RadioPowerProfile = RadioPowerProfile(),
    distance_m: float = 100.0,
    cycle_ns: int = 1_280 * NS_PER_MS,
    name: str = "fine_fast_path",
) -> BuiltScenario:
    """Two devices already in fine sync: one data flow goes straight to the
    paging occasion with no sync signaling at all."""
    imsi_dst = _mid_phase_imsi(cycle_ns)
    src_cfg = FlexiSrcConfig(
        device_id=SRC_ID,
        peer_id=DST_ID,
        peer_imsi=imsi_dst,
        peer_cycle_ns=cycle_ns,
        mode="handshake",
        initial_fine=True,
        fine_validity_ns=10**18,
        data_guard_ns=cycle_ns,
    )
    dst_cfg = FlexiDstConfig(
        device_id=DST_ID,
        own_imsi=imsi_dst,
        cycle_ns=cycle_ns,
        ssw_mode="off",
    )
    devices = (
        DeviceConfig(SRC_ID, imsi_dst + 7, src_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns),
        DeviceConfig(DST_ID, imsi_dst, dst_cfg, radio=profile,
                     sl_drx_cycle_ns=cycle_ns, position_m=(distance_m, 0.0)),
    )
    flows = (Flow(SRC_ID, DST_ID, first_at_ns=0, kind="data"),)
    return BuiltScenario(
        Scenario(devices, flows, _channel(distance_m, comm_range_m=50_000.0), name),
        4 * cycle_ns,
        SRC_ID,
        DST_ID,
    )


def build_for_method(method: str, **kwargs) -> BuiltScenario:
    """Scenario for a named sync method; keyword arguments as the individual
    builders accept them."""
    builders = {
        "flexi_coarse": flexi_handshake_scenario,
        "flexi_coldstart": coldstart_scenario,
        "rx_beacon": rx_beacon_scenario,
        "tx_beacon": tx_beacon_scenario,
        "legacy": legacy_scenario,
    }
    if method not in builders:
        raise ConfigError(f"unknown sync method {method!r}")
    return builders[method](**kwargs)


__all__ = [
    "BuiltScenario",
    "build_for_method",
    "coldstart_scenario",
    "fine_fast_path_scenario",
    "flexi_handshake_scenario",
    "flexi_range_scenario",
    "legacy_scenario",
    "rx_beacon_scenario",
    "tx_beacon_scenario",
]
