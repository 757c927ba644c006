"""Deterministic discrete-event radio simulator.

One simulation is one logical thread: a single event queue ordered by
(time, insertion sequence), per-device drifting clocks, a geometric channel
with exact time-of-flight, and per-device energy ledgers built from labeled
radio-state dwell intervals in integer nanoseconds.

Radio model
-----------
* A transmission occupies the sender's radio for its full duration; it is
  suppressed entirely if it overlaps a primary-RAT busy interval.
* A listener decodes a message when the arrival *starts* inside one of its
  scheduled listening windows (while not busy and not transmitting) and no
  overlapping reception collides with it. The radio stays on past a window's
  end while a reception is in progress, so back-to-back messages that begin
  inside the window are decoded in full.
* Half duplex holds by construction: listening time is carved around the
  device's own transmissions and busy intervals, and arrivals during a
  transmission are lost.

Energy is accounted at the end of the run: state dwell times are exact
integer nanoseconds, powers are applied once per state, and per-label
bookkeeping separates synchronization signaling from paging duty and data
so the sync overhead can be compared with the closed-form power models.
"""

from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import protocol as proto
from .errors import ConfigError, ProtocolError
from .timebase import DriftingClock, flight_time_ns, seconds

#: dwell labels counted as synchronization overhead (the quantity the
#: closed-form power models describe)
SYNC_LABELS = frozenset(
    {"slss", "time_req", "time_rsp", "ssw", "rsp_listen", "beacon_standby"}
)

ALL_LOST = "all_lost"
CAPTURE = "capture"

#: the receiver holds its radio on briefly after each reception so a message
#: chained back-to-back (sync signal then timing request) is still decoded
RX_TAIL_NS = 1_000


# ---------------------------------------------------------------------------
# Channel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelModel:
    """Static positions, a hard communication range, and exact propagation
    delays; reception is geometric (no fading or SNR model)."""

    positions_m: dict[int, tuple[float, float]]
    comm_range_m: float = 50_000.0
    collision_policy: str = ALL_LOST

    def __post_init__(self) -> None:
        if self.comm_range_m <= 0:
            raise ConfigError("communication range must be positive")
        if self.collision_policy not in (ALL_LOST, CAPTURE):
            raise ConfigError(f"unknown collision policy {self.collision_policy!r}")

    def distance_m(self, a: int, b: int) -> float:
        xa, ya = self.positions_m[a]
        xb, yb = self.positions_m[b]
        return math.hypot(xa - xb, ya - yb)

    def flight_ns(self, a: int, b: int) -> int:
        return flight_time_ns(self.distance_m(a, b))


def deliver(
    channel: ChannelModel, msg: proto.Message, tx_start_ns: int, sender_id: int
) -> list[tuple[int, int, int]]:
    """Arrival schedule for one transmission: (receiver, arrival_ns,
    flight_ns) for every other device within communication range."""
    if sender_id not in channel.positions_m:
        raise ConfigError(f"unknown sender {sender_id}")
    out = []
    for rid in sorted(channel.positions_m):
        if rid == sender_id:
            continue
        if channel.distance_m(sender_id, rid) <= channel.comm_range_m:
            f = channel.flight_ns(sender_id, rid)
            out.append((rid, tx_start_ns + f, f))
    return out


def detect_collision(policy: str, distances_m: list[float]) -> list[bool]:
    """Survival flags for time-overlapping receptions at one receiver.

    Destructive default: everything is lost. Capture: the strictly nearest
    transmitter survives; a distance tie destroys all.
    """
    n = len(distances_m)
    if n == 0:
        return []
    if n == 1:
        return [True]
    if policy == ALL_LOST:
        return [False] * n
    if policy != CAPTURE:
        raise ConfigError(f"unknown collision policy {policy!r}")
    d_min = min(distances_m)
    if distances_m.count(d_min) > 1:
        return [False] * n
    return [d == d_min for d in distances_m]


# ---------------------------------------------------------------------------
# Flows and scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Flow:
    """Traffic descriptor: periodic or one-shot data (or pure resync)
    arrivals at ``src``. With ``arm_dst`` the receiver learns the same epochs
    and arms its sync window for the rendezvous."""

    src: int
    dst: int
    first_at_ns: int
    period_ns: int = 0  # 0 => one-shot
    count: int = 0      # 0 => until horizon (periodic only)
    kind: str = "data"  # 'data' | 'resync'
    arm_dst: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("data", "resync"):
            raise ConfigError(f"unknown flow kind {self.kind!r}")
        if self.first_at_ns < 0:
            raise ConfigError("flow start must be non-negative")


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs besides the seed and the horizon."""

    devices: tuple[proto.DeviceConfig, ...]
    flows: tuple[Flow, ...]
    channel: ChannelModel
    name: str = "scenario"

    def __post_init__(self) -> None:
        ids = [d.device_id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ConfigError("device ids must be unique")
        imsis = [d.imsi for d in self.devices]
        if len(set(imsis)) != len(imsis):
            raise ConfigError("imsis must be unique")
        known = set(ids)
        for f in self.flows:
            if f.src not in known or f.dst not in known:
                raise ConfigError(f"flow references unknown device {f.src}->{f.dst}")
        for d in self.devices:
            if d.device_id not in self.channel.positions_m:
                raise ConfigError(f"device {d.device_id} has no position")


# ---------------------------------------------------------------------------
# Ledger and results
# ---------------------------------------------------------------------------

@dataclass
class EnergyLedger:
    """Per-device radio-state accounting. Dwell times are integer ns that
    sum exactly to the horizon; joules are computed once at finalize."""

    device_id: int
    tx_ns: int = 0
    rx_ns: int = 0
    sleep_ns: int = 0
    tx_ns_by_label: dict[str, int] = field(default_factory=dict)
    rx_ns_by_label: dict[str, int] = field(default_factory=dict)
    joules_tx: float = 0.0
    joules_rx: float = 0.0
    joules_sleep: float = 0.0

    def sync_overhead_w(self, profile, horizon_ns: int) -> float:
        """Average power of the sync-labeled dwells only."""
        tx = sum(ns for lbl, ns in self.tx_ns_by_label.items() if lbl in SYNC_LABELS)
        rx = sum(ns for lbl, ns in self.rx_ns_by_label.items() if lbl in SYNC_LABELS)
        joules = profile.p_tx_w * seconds(tx) + profile.p_rx_w * seconds(rx)
        return joules / seconds(horizon_ns)


def ledger_power(ledger: EnergyLedger, component: str, horizon_ns: int) -> float:
    """Average power in watts of one radio state (or everything) over the
    horizon."""
    if horizon_ns <= 0:
        raise ConfigError("horizon must be positive")
    joules = {
        "tx": ledger.joules_tx,
        "rx": ledger.joules_rx,
        "sleep": ledger.joules_sleep,
        "total": ledger.joules_tx + ledger.joules_rx + ledger.joules_sleep,
    }
    if component not in joules:
        raise ConfigError(f"unknown ledger component {component!r}")
    return joules[component] / seconds(horizon_ns)


@dataclass(frozen=True)
class SyncReport:
    time_ns: int
    device: int
    peer: int
    success: bool
    attempts: int


@dataclass(frozen=True)
class DataReport:
    time_ns: int
    device: int
    peer: int
    ok: bool
    misalign_ns: int


@dataclass(frozen=True)
class FlowStats:
    src: int
    dst: int
    kind: str
    injected: int
    sync_ok: int
    sync_fail: int
    data_ok: int
    data_fail: int

    @property
    def sync_failure(self) -> bool:
        achieved = self.data_ok if self.kind == "data" else self.sync_ok
        return achieved < self.injected or self.sync_fail > 0 or self.data_fail > 0


@dataclass
class RunResult:
    scenario_name: str
    seed: int
    horizon_ns: int
    ledgers: dict[int, EnergyLedger]
    avg_power_w: dict[int, float]
    sync_overhead_w: dict[int, float]
    sync_reports: list[SyncReport]
    data_reports: list[DataReport]
    delta_sync_samples: list[tuple[int, int, int, int, str]]  # (t, a, b, |delta|, trigger)
    flow_stats: list[FlowStats]
    trace_lines: Optional[list[str]]

    def realized_attempts(self, device: Optional[int] = None) -> list[int]:
        return [
            r.attempts
            for r in self.sync_reports
            if r.success and (device is None or r.device == device)
        ]

    def trace_text(self) -> str:
        if self.trace_lines is None:
            raise ConfigError("run was executed without trace recording")
        return "\n".join(self.trace_lines) + "\n"


# ---------------------------------------------------------------------------
# Device runtime
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class _Window:
    start_ns: int
    end_ns: int
    label: str
    extended_until_ns: int


@dataclass(eq=False)
class _Reception:
    rid: int
    msg: proto.Message
    sender: int
    start_ns: int
    end_ns: int
    flight_ns: int
    distance_m: float
    collided: bool = False


class _Device:
    """Mutable per-device runtime: clock, machine state, radio timeline.

    Windows and transmissions that can no longer interact with the present
    are moved to archives so live queries stay O(small); archives are only
    read again at finalize for the energy carve.
    """

    def __init__(self, cfg: proto.DeviceConfig, clock: DriftingClock) -> None:
        self.cfg = cfg
        self.clock = clock
        self.state: Optional[proto.RoleState] = None
        self.live_windows: list[_Window] = []
        self.window_archive: list[_Window] = []
        self.live_tx: list[tuple[int, int, str]] = []
        self.tx_archive: list[tuple[int, int, str]] = []
        self.max_msg_dur = 0
        self.busy: list[tuple[int, int]] = sorted(cfg.busy_ns)
        self.busy_starts = [s for s, _ in self.busy]
        self.active_rx: dict[int, _Reception] = {}

    # -- sweeping -----------------------------------------------------------

    def _sweep(self, now_ns: int) -> None:
        keep_from = now_ns - 2 * self.max_msg_dur - 1
        if self.live_windows:
            still = [w for w in self.live_windows if w.extended_until_ns > now_ns]
            if len(still) != len(self.live_windows):
                self.window_archive.extend(
                    w for w in self.live_windows if w.extended_until_ns <= now_ns
                )
                self.live_windows = still
        if self.live_tx:
            still_tx = [t for t in self.live_tx if t[1] > keep_from]
            if len(still_tx) != len(self.live_tx):
                self.tx_archive.extend(t for t in self.live_tx if t[1] <= keep_from)
                self.live_tx = still_tx

    # -- radio state queries ------------------------------------------------

    def in_busy(self, t: int) -> bool:
        i = bisect.bisect_right(self.busy_starts, t) - 1
        return i >= 0 and self.busy[i][0] <= t < self.busy[i][1]

    def busy_overlaps(self, start: int, end: int) -> bool:
        i = max(bisect.bisect_right(self.busy_starts, start) - 1, 0)
        for s, e in self.busy[i:]:
            if s >= end:
                return False
            if e > start:
                return True
        return False

    def transmitting_at(self, t: int) -> bool:
        return any(s <= t < e for s, e, _ in self.live_tx)

    def tx_overlaps(self, start: int, end: int) -> bool:
        return any(s < end and start < e for s, e, _ in self.live_tx)

    def listening_window(self, t: int) -> Optional[_Window]:
        self._sweep(t)
        for w in self.live_windows:
            if w.start_ns <= t < w.extended_until_ns:
                return w
        return None

    def add_window(self, start: int, end: int, label: str) -> None:
        self.live_windows.append(_Window(start, end, label, end))

    def add_tx(self, start: int, end: int, label: str) -> None:
        self.live_tx.append((start, end, label))
        self.max_msg_dur = max(self.max_msg_dur, end - start)

    def all_windows(self) -> list[_Window]:
        return self.window_archive + self.live_windows

    def all_tx(self) -> list[tuple[int, int, str]]:
        return self.tx_archive + self.live_tx


def _merge_intervals(items: list[tuple[int, int, str]]) -> list[tuple[int, int, str]]:
    """Merge overlapping labeled intervals; an overlap keeps the label of the
    earliest start (stable and deterministic)."""
    out: list[tuple[int, int, str]] = []
    for s, e, lbl in sorted(items, key=lambda x: (x[0], x[1])):
        if out and s <= out[-1][1]:
            ps, pe, plbl = out[-1]
            out[-1] = (ps, max(pe, e), plbl)
        else:
            out.append((s, e, lbl))
    return out


def _subtract(intervals: list[tuple[int, int, str]],
              cuts: list[tuple[int, int]]) -> list[tuple[int, int, str]]:
    """Remove `cuts` from labeled intervals (both sorted or not; cuts may
    overlap each other)."""
    if not cuts:
        return list(intervals)
    merged_cuts: list[tuple[int, int]] = []
    for s, e in sorted(cuts):
        if merged_cuts and s <= merged_cuts[-1][1]:
            merged_cuts[-1] = (merged_cuts[-1][0], max(merged_cuts[-1][1], e))
        else:
            merged_cuts.append((s, e))
    out: list[tuple[int, int, str]] = []
    for s, e, lbl in intervals:
        cur = s
        for cs, ce in merged_cuts:
            if ce <= cur:
                continue
            if cs >= e:
                break
            if cs > cur:
                out.append((cur, cs, lbl))
            cur = max(cur, ce)
            if cur >= e:
                break
        if cur < e:
            out.append((cur, e, lbl))
    return out


def _assert_disjoint(device_id: int, tx: list[tuple[int, int, str]],
                     rx: list[tuple[int, int, str]]) -> None:
    """Half-duplex audit: transmit and (carved) receive dwells never overlap."""
    i = j = 0
    while i < len(tx) and j < len(rx):
        ts, te, _ = tx[i]
        rs, re, _ = rx[j]
        if ts < re and rs < te:
            raise ProtocolError(f"device {device_id} violates half duplex")
        if te <= rs:
            i += 1
        else:
            j += 1


# ---------------------------------------------------------------------------
# Simulator
# ---------------------------------------------------------------------------

class Simulator:
    """Runs one scenario deterministically for a given seed."""

    def __init__(self, scenario: Scenario, seed: int, trace: bool = False) -> None:
        self.scenario = scenario
        self.seed = seed
        self.trace: Optional[list[str]] = [] if trace else None
        self.queue: list[tuple[int, int, str, tuple]] = []
        self.seq = 0
        self.now = 0
        self.last_popped = 0
        self.rx_counter = 0
        rng = np.random.default_rng(seed)
        self.devices: dict[int, _Device] = {}
        for cfg in sorted(scenario.devices, key=lambda d: d.device_id):
            offset = cfg.initial_offset_ns
            if isinstance(offset, tuple):
                lo, hi = offset
                offset = int(rng.integers(lo, hi + 1))
            self.devices[cfg.device_id] = _Device(cfg, DriftingClock(offset, cfg.drift_ppm, 0))
        self.sync_reports: list[SyncReport] = []
        self.data_reports: list[DataReport] = []
        self.delta_samples: list[tuple[int, int, int, int, str]] = []
        self.flow_pairs = sorted({(f.src, f.dst) for f in scenario.flows})
        self.flow_injected: dict[tuple[int, int], int] = {
            (f.src, f.dst): 0 for f in scenario.flows
        }

    # -- infrastructure -----------------------------------------------------

    def _push(self, at: int, kind: str, payload: tuple) -> None:
        if at < self.now:
            raise ProtocolError(f"attempt to schedule {kind} at {at} before now {self.now}")
        heapq.heappush(self.queue, (at, self.seq, kind, payload))
        self.seq += 1

    def _record(self, device: int, event: str, detail: str) -> None:
        if self.trace is not None:
            self.trace.append(f"{self.now}\t{device}\t{event}\t{detail}")

    def _to_global(self, dev: _Device, at_local_ns: int, what: str) -> int:
        """Global instant for a device-local schedule point. The drift
        truncation makes the inverse ambiguous by a nanosecond or two around
        'now'; within that quantization the action runs immediately."""
        g = dev.clock.global_for_local(at_local_ns)
        if g < self.now:
            if self.now - g <= 4:
                return self.now
            raise ProtocolError(
                f"device {dev.cfg.device_id} scheduled a {what} in the past "
                f"({g} < {self.now})"
            )
        return g

    def _sample_deltas(self, device_id: int, kind: str) -> None:
        for a, b in self.flow_pairs:
            if device_id in (a, b):
                da, db = self.devices[a], self.devices[b]
                delta = abs(da.clock.local_time(self.now) - db.clock.local_time(self.now))
                self.delta_samples.append((self.now, a, b, delta, kind))

    # -- run ----------------------------------------------------------------

    def run(self, horizon_ns: int) -> RunResult:
        if horizon_ns <= 0:
            raise ConfigError("horizon must be positive")
        self._schedule_flows(horizon_ns)
        self._bootstrap()
        while self.queue:
            at, _seq, kind, payload = heapq.heappop(self.queue)
            if at < self.last_popped:  # pragma: no cover - queue is a heap
                raise ProtocolError("event queue popped out of order")
            self.last_popped = at
            if at >= horizon_ns:
                break
            self.now = at
            if kind == "timer":
                self._on_timer(*payload)
            elif kind == "data":
                self._on_data(*payload)
            elif kind == "rx_start":
                self._on_rx_start(*payload)
            elif kind == "rx_end":
                self._on_rx_end(*payload)
            else:  # pragma: no cover - defensive
                raise ProtocolError(f"unknown event kind {kind}")
        return self._finalize(horizon_ns)

    def _schedule_flows(self, horizon_ns: int) -> None:
        for f in self.scenario.flows:
            t = f.first_at_ns
            n = 0
            while t < horizon_ns and (f.count == 0 or n < f.count):
                self._push(t, "data", (f.src, f.dst, True))
                if f.arm_dst:
                    self._push(t, "data", (f.dst, f.src, False))
                self.flow_injected[(f.src, f.dst)] += 1
                n += 1
                if f.period_ns <= 0:
                    break
                t += f.period_ns

    def _bootstrap(self) -> None:
        for did in sorted(self.devices):
            dev = self.devices[did]
            local = dev.clock.local_time(0)
            state, actions = proto.start_role(dev.cfg.role_config, local)
            dev.state = state
            self._apply_actions(dev, actions)

    # -- event handlers -----------------------------------------------------

    def _dispatch(self, dev: _Device, event: proto.Event) -> None:
        assert dev.state is not None
        local = dev.clock.local_time(self.now)
        ctx = proto.StepContext(local, dev.cfg.role_config)
        dev.state, actions = proto.step(dev.state, event, ctx)
        self._apply_actions(dev, actions)

    def _on_timer(self, device_id: int, tag: str, serial: int) -> None:
        self._dispatch(self.devices[device_id], proto.TimerFired(tag, serial))

    def _on_data(self, device_id: int, peer: int, is_src: bool) -> None:
        self._record(device_id, "data_arrival", f"peer={peer} src={int(is_src)}")
        self._dispatch(self.devices[device_id], proto.DataArrived())

    def _on_rx_start(self, device_id: int, rx: _Reception) -> None:
        dev = self.devices[device_id]
        t = self.now
        if dev.in_busy(t):
            self._record(device_id, "rx_drop",
                         f"reason=busy kind={rx.msg.kind.value} src={rx.sender}")
            return
        if dev.transmitting_at(t):
            self._record(device_id, "rx_drop",
                         f"reason=half_duplex kind={rx.msg.kind.value} src={rx.sender}")
            return
        w = dev.listening_window(t)
        if w is None:
            return  # radio off, silently missed
        # receptions ending exactly now are adjacent, not overlapping
        ongoing = [c for c in dev.active_rx.values() if c.end_ns > t]
        if ongoing:
            contenders = ongoing + [rx]
            flags = detect_collision(
                self.scenario.channel.collision_policy,
                [c.distance_m for c in contenders],
            )
            for c, survives in zip(contenders, flags):
                was = c.collided
                c.collided = c.collided or not survives
                if c.collided and not was:
                    self._record(device_id, "rx_collision",
                                 f"kind={c.msg.kind.value} src={c.sender}")
        dev.active_rx[rx.rid] = rx
        w.extended_until_ns = max(w.extended_until_ns, rx.end_ns + RX_TAIL_NS)
        self._record(device_id, "rx_start", f"kind={rx.msg.kind.value} src={rx.sender}")
        self._push(rx.end_ns, "rx_end", (device_id, rx))

    def _on_rx_end(self, device_id: int, rx: _Reception) -> None:
        dev = self.devices[device_id]
        dev.active_rx.pop(rx.rid, None)
        if rx.collided:
            return
        if dev.tx_overlaps(rx.start_ns, rx.end_ns) or dev.busy_overlaps(rx.start_ns, rx.end_ns):
            self._record(device_id, "rx_drop",
                         f"reason=interrupted kind={rx.msg.kind.value} src={rx.sender}")
            return
        arrival_local = dev.clock.local_time(rx.start_ns)
        self._record(device_id, "decode", f"kind={rx.msg.kind.value} src={rx.sender}")
        self._dispatch(dev, proto.MessageReceived(rx.msg, arrival_local, rx.flight_ns))

    # -- actions ------------------------------------------------------------

    def _apply_actions(self, dev: _Device, actions: tuple[proto.Action, ...]) -> None:
        did = dev.cfg.device_id
        for action in actions:
            if isinstance(action, proto.ResyncClock):
                dev.clock = dev.clock.adjust(self.now, action.delta_ns)
                self._record(did, "resync", f"delta={action.delta_ns}")
                self._sample_deltas(did, "resync")
            elif isinstance(action, proto.Transmit):
                self._do_transmit(dev, action)
            elif isinstance(action, proto.Listen):
                g0 = self._to_global(dev, action.start_local_ns, "listen")
                g1 = dev.clock.global_for_local(action.end_local_ns)
                if g1 <= g0:
                    raise ProtocolError("listen window must have positive length")
                dev.add_window(g0, g1, action.label)
                self._record(did, "listen", f"start={g0} end={g1} label={action.label}")
            elif isinstance(action, proto.SetTimer):
                g = self._to_global(dev, action.at_local_ns, "timer")
                self._push(g, "timer", (did, action.tag, action.serial))
            elif isinstance(action, proto.ReportSync):
                self.sync_reports.append(
                    SyncReport(self.now, did, action.peer_id, action.success, action.attempts)
                )
                self._record(
                    did, "report_sync",
                    f"peer={action.peer_id} ok={int(action.success)} attempts={action.attempts}",
                )
                if action.success:
                    self._sample_deltas(did, "sync_ok")
            elif isinstance(action, proto.ReportData):
                self.data_reports.append(
                    DataReport(self.now, did, action.peer_id, action.ok, action.misalign_ns)
                )
                self._record(
                    did, "report_data",
                    f"peer={action.peer_id} ok={int(action.ok)} misalign={action.misalign_ns}",
                )
                self._sample_deltas(did, "data")
            elif isinstance(action, proto.Sleep):
                pass
            else:  # pragma: no cover - defensive
                raise ProtocolError(f"unknown action {action!r}")

    def _do_transmit(self, dev: _Device, action: proto.Transmit) -> None:
        did = dev.cfg.device_id
        g0 = self._to_global(dev, action.at_local_ns, "transmit")
        g1 = g0 + action.msg.duration_ns
        if dev.busy_overlaps(g0, g1):
            self._record(did, "tx_gated", f"kind={action.msg.kind.value} start={g0}")
            return
        dev.add_tx(g0, g1, action.msg.kind.value)
        dst = action.msg.dst_id if action.msg.dst_id is not None else -1
        self._record(did, "tx", f"kind={action.msg.kind.value} dst={dst} start={g0} end={g1}")
        for target, arrival, flight in deliver(self.scenario.channel, action.msg, g0, did):
            self.rx_counter += 1
            rx = _Reception(
                self.rx_counter, action.msg, did, arrival,
                arrival + action.msg.duration_ns, flight,
                self.scenario.channel.distance_m(did, target),
            )
            self._push(arrival, "rx_start", (target, rx))

    # -- finalize -----------------------------------------------------------

    def _finalize(self, horizon_ns: int) -> RunResult:
        ledgers: dict[int, EnergyLedger] = {}
        avg_power: dict[int, float] = {}
        overhead: dict[int, float] = {}
        for did in sorted(self.devices):
            dev = self.devices[did]
            tx = sorted(
                (max(0, s), min(horizon_ns, e), lbl)
                for s, e, lbl in dev.all_tx()
                if s < horizon_ns and e > 0
            )
            for (_, e1, _), (s2, _, _) in zip(tx, tx[1:]):
                if s2 < e1:
                    raise ProtocolError(f"device {did} has overlapping transmissions")
            windows = [
                (max(0, w.start_ns), min(horizon_ns, w.extended_until_ns), w.label)
                for w in dev.all_windows()
                if w.start_ns < horizon_ns and w.extended_until_ns > 0
            ]
            merged = _merge_intervals(windows)
            cuts = [(s, e) for s, e, _ in tx] + list(dev.busy)
            rx = _subtract(merged, cuts)
            _assert_disjoint(did, tx, rx)
            tx_total = sum(e - s for s, e, _ in tx)
            rx_total = sum(e - s for s, e, _ in rx)
            sleep_total = horizon_ns - tx_total - rx_total
            if sleep_total < 0:
                raise ProtocolError(f"device {did} dwell exceeds horizon")
            ledger = EnergyLedger(did)
            ledger.tx_ns = tx_total
            ledger.rx_ns = rx_total
            ledger.sleep_ns = sleep_total
            for s, e, lbl in tx:
                ledger.tx_ns_by_label[lbl] = ledger.tx_ns_by_label.get(lbl, 0) + (e - s)
            for s, e, lbl in rx:
                ledger.rx_ns_by_label[lbl] = ledger.rx_ns_by_label.get(lbl, 0) + (e - s)
            p = dev.cfg.radio
            ledger.joules_tx = p.p_tx_w * seconds(tx_total)
            ledger.joules_rx = p.p_rx_w * seconds(rx_total)
            ledger.joules_sleep = p.p_sleep_w * seconds(sleep_total)
            ledgers[did] = ledger
            avg_power[did] = ledger_power(ledger, "total", horizon_ns)
            overhead[did] = ledger.sync_overhead_w(p, horizon_ns)
        return RunResult(
            scenario_name=self.scenario.name,
            seed=self.seed,
            horizon_ns=horizon_ns,
            ledgers=ledgers,
            avg_power_w=avg_power,
            sync_overhead_w=overhead,
            sync_reports=self.sync_reports,
            data_reports=self.data_reports,
            delta_sync_samples=self.delta_samples,
            flow_stats=self._flow_stats(),
            trace_lines=self.trace,
        )

    def _flow_stats(self) -> list[FlowStats]:
        stats = []
        for f in self.scenario.flows:
            sync_ok = sum(1 for r in self.sync_reports if r.device == f.src and r.success)
            sync_fail = sum(1 for r in self.sync_reports if r.device == f.src and not r.success)
            data_ok = sum(
                1 for r in self.data_reports
                if r.device == f.dst and r.peer == f.src and r.ok
            )
            data_fail = sum(
                1 for r in self.data_reports
                if r.device == f.dst and r.peer == f.src and not r.ok
            )
            stats.append(
                FlowStats(f.src, f.dst, f.kind, self.flow_injected[(f.src, f.dst)],
                          sync_ok, sync_fail, data_ok, data_fail)
            )
        return stats


def run(scenario: Scenario, seed: int, horizon_ns: int, trace: bool = False) -> RunResult:
    """Simulate `scenario` to `horizon_ns`. Deterministic for fixed
    (scenario, seed): identical inputs give byte-identical traces."""
    return Simulator(scenario, seed, trace=trace).run(horizon_ns)


__all__ = [
    "ALL_LOST",
    "CAPTURE",
    "SYNC_LABELS",
    "ChannelModel",
    "DataReport",
    "EnergyLedger",
    "Flow",
    "FlowStats",
    "RunResult",
    "Scenario",
    "Simulator",
    "SyncReport",
    "deliver",
    "detect_collision",
    "ledger_power",
    "run",
]
