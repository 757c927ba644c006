"""Sidelink rendezvous protocol: message schemas, paging-occasion and sync
window scheduling, and pure state machines for the four device roles.

Roles
-----
* ``FLEXI_SRC``: data sender. Fast path transmits data directly on the
  peer's paging occasion when fine-synced; otherwise it sweeps candidate
  offsets with sync-signal + timing-request attempts until a timing
  response arrives, then sends the data.
* ``FLEXI_DST``: duty-cycled receiver. Listens a 1 ms paging occasion each
  DRX cycle, opens a sync window (SSW) over the occasion when a rendezvous
  is expected (or every cycle, or periodically to track a broadcasting
  beacon), resynchronizes its clock from a decoded sync signal, and answers
  timing requests.
* ``TX_BEACON``: broadcasts a timing-bearing sync signal at a fixed period.
* ``RX_BEACON``: listens persistently and answers any timing request.

``step`` is a pure function: identical (state, event, context) always yields
identical (state, actions). The simulation loop owns clocks and converts the
local-time instants in actions to global time. A ``ResyncClock`` action must
be applied before the actions that follow it in the same transition.

Timers cannot be revoked once scheduled, so cancellation is expressed with
serial numbers: each machine stamps timers with its current serial and bumps
the serial to invalidate everything outstanding. A ``TimerFired`` whose
serial is stale is consumed silently. Messages not addressed to the device
are ignored like hardware address filtering would; anything else that is
out of phase is a hard ``ProtocolError`` so scheduler bugs surface instead
of being dropped.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Union

from .errors import ConfigError, ProtocolError
from .power_model import RadioPowerProfile
from .timebase import NS_PER_MS, SyncLevel, ceil_div, classify_sync

PO_LEN_NS = NS_PER_MS  # paging occasions are one-subframe (1 ms) slots


# ---------------------------------------------------------------------------
# Messages
# ---------------------------------------------------------------------------

class MessageKind(enum.Enum):
    SLSS = "slss"
    TIME_REQ = "time_req"
    TIME_RSP = "time_rsp"
    SL_DATA = "sl_data"


@dataclass(frozen=True)
class TimingPayload:
    """Timing information carried by sync signals and timing responses:
    the sender's local time at transmit start, the sender's identity, its
    DRX cycle (so the receiver can derive the paging-occasion grid), and,
    for data, the slot boundary the sender aimed the transmission at."""

    sender_local_ns: int
    sender_id: int
    sl_drx_cycle_ns: Optional[int] = None
    target_slot_ns: Optional[int] = None


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    src_id: int
    dst_id: Optional[int]  # None = broadcast
    duration_ns: int
    timing_payload: Optional[TimingPayload] = None
    piggyback_req: bool = False  # sync signal carrying an implicit timing request

    def __post_init__(self) -> None:
        if self.duration_ns <= 0:
            raise ConfigError("message duration must be positive")
        if self.kind is MessageKind.TIME_RSP and self.timing_payload is None:
            raise ConfigError("timing responses must carry a timing payload")
        if self.piggyback_req and self.kind is not MessageKind.SLSS:
            raise ConfigError("only sync signals can piggyback a timing request")


def slss_matches(msg: Message, expected_dst: int) -> bool:
    """Pseudo-unique sync-signal filter: a signal is accepted when it is
    broadcast (no embedded destination) or embeds this listener's identity."""
    if msg.kind is not MessageKind.SLSS:
        raise TypeError(f"slss_matches requires an SLSS message, got {msg.kind}")
    return msg.dst_id is None or msg.dst_id == expected_dst


# ---------------------------------------------------------------------------
# Schedule slots
# ---------------------------------------------------------------------------

class SlotKind(enum.Enum):
    SL_PO = "sl_po"
    SSW = "ssw"


@dataclass(frozen=True)
class ScheduleSlot:
    kind: SlotKind
    start_ns: int  # in the owner's local clock
    length_ns: int

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.length_ns


def next_sl_po(imsi: int, sl_drx_cycle_ns: int, after_local_ns: int) -> ScheduleSlot:
    """Earliest paging occasion strictly after `after_local_ns`.

    Occasions are the 1 ms slots whose millisecond index is congruent to the
    device identity modulo the cycle length, so consecutive results are
    exactly one DRX cycle apart.
    """
    if sl_drx_cycle_ns < PO_LEN_NS or sl_drx_cycle_ns % PO_LEN_NS != 0:
        raise ConfigError("sl_drx_cycle must be a positive multiple of 1 ms")
    if imsi < 0:
        raise ConfigError("imsi must be non-negative")
    slots_per_cycle = sl_drx_cycle_ns // PO_LEN_NS
    base_ns = (imsi % slots_per_cycle) * PO_LEN_NS
    k = (after_local_ns - base_ns) // sl_drx_cycle_ns + 1
    return ScheduleSlot(SlotKind.SL_PO, base_ns + k * sl_drx_cycle_ns, PO_LEN_NS)


def ssw_for_po(po: ScheduleSlot, t_win_ns: int, alignment: float = 0.5) -> ScheduleSlot:
    """Sync window of length t_win positioned so the paging occasion sits at
    the given alignment fraction (0 = window starts at the occasion,
    0.5 = centered, 1 = occasion at the window's end)."""
    if t_win_ns < po.length_ns:
        raise ConfigError("t_win must be at least the paging-occasion length")
    start = po.start_ns - int(round(alignment * (t_win_ns - po.length_ns)))
    window = ScheduleSlot(SlotKind.SSW, start, t_win_ns)
    if not (window.start_ns <= po.start_ns and po.end_ns <= window.end_ns):
        raise ConfigError("alignment places the paging occasion outside the window")
    return window


def expected_attempts(sl_drx_cycle_ns: int, t_win_ns: int) -> float:
    """Analytic mean number of cold-start sweep attempts over a uniformly
    random receiver phase: (ceil(cycle / t_win) + 1) / 2."""
    if not (PO_LEN_NS <= t_win_ns <= sl_drx_cycle_ns):
        raise ConfigError("t_win must lie in [1 ms, sl_drx_cycle]")
    return (ceil_div(sl_drx_cycle_ns, t_win_ns) + 1) / 2


# ---------------------------------------------------------------------------
# Device configuration
# ---------------------------------------------------------------------------

class Coverage(enum.Enum):
    HC = "hc"      # homogeneous coverage
    OOC = "ooc"    # out of coverage
    PC = "pc"      # partial coverage
    COOS = "coos"  # covered but served by unsynchronized cells


class Role(enum.Enum):
    FLEXI_SRC = "flexi_src"
    FLEXI_DST = "flexi_dst"
    TX_BEACON = "tx_beacon"
    RX_BEACON = "rx_beacon"


@dataclass(frozen=True)
class FlexiSrcConfig:
    device_id: int
    peer_id: int
    peer_imsi: int
    peer_cycle_ns: int
    mode: str = "handshake"  # 'handshake' | 'oneway' | 'direct'
    t_ss_ns: int = NS_PER_MS
    t_req_ns: int = NS_PER_MS
    t_rsp_ns: int = NS_PER_MS
    n_attempts: int = 1
    sweep_step_ns: int = 72 * NS_PER_MS
    sweep_lo_ns: int = 0         # first candidate offset from the estimated PO center
    sweep_anchor: str = "po"     # 'po' | 'now'
    data_duration_ns: int = NS_PER_MS  # 0 => sync-only (periodic resync) flow
    arm_guard_ns: int = 2 * 1_280 * NS_PER_MS
    data_guard_ns: int = 10 * NS_PER_MS
    attempt_slack_ns: int = 100_000
    fine_validity_ns: int = 0    # how long after a sync the fast path stays valid
    initial_fine: bool = False
    piggyback_req: bool = False
    broadcast_slss: bool = False  # omit the peer identity (cold start / any listener)
    ranging: bool = False         # known flight time: compensate and advance timing
    known_flight_ns: int = 0
    resync_from_rsp: bool = False  # adopt the responder's timing (beacon tracking)

    def __post_init__(self) -> None:
        if self.mode not in ("handshake", "oneway", "direct"):
            raise ConfigError(f"unknown flexi source mode {self.mode!r}")
        if self.sweep_anchor not in ("po", "now"):
            raise ConfigError(f"unknown sweep anchor {self.sweep_anchor!r}")
        if self.n_attempts < 1:
            raise ConfigError("n_attempts must be >= 1")
        attempt_air = self.t_ss_ns + (0 if self.piggyback_req else self.t_req_ns) + self.t_rsp_ns
        if self.mode == "handshake" and self.sweep_step_ns < attempt_air + self.attempt_slack_ns:
            raise ConfigError("sweep step too small for one attempt plus response listen")


@dataclass(frozen=True)
class FlexiDstConfig:
    device_id: int
    own_imsi: int
    cycle_ns: int
    ssw_mode: str = "per_data"  # 'off' | 'per_data' | 'always' | 'periodic'
    ssw_len_ns: int = 72 * NS_PER_MS
    ssw_alignment: float = 0.5
    t_rsp_ns: int = NS_PER_MS
    t_cp_ns: int = 4_690
    t_slsw_ns: int = 5 * NS_PER_MS
    po_duty: bool = True
    arm_guard_ns: int = 2 * 1_280 * NS_PER_MS
    period_ns: int = 0            # periodic beacon-tracking round interval
    scan_retry_gap_ns: int = NS_PER_MS
    scan_max_attempts: int = 1
    first_round_local_ns: int = 0
    data_wait_ns: int = 20 * NS_PER_MS  # stay receptive after answering a request
    ranging: bool = False

    def __post_init__(self) -> None:
        if self.ssw_mode not in ("off", "per_data", "always", "periodic"):
            raise ConfigError(f"unknown ssw mode {self.ssw_mode!r}")
        if self.ssw_mode == "periodic":
            span = self.scan_max_attempts * (self.ssw_len_ns + self.scan_retry_gap_ns)
            if self.period_ns <= span:
                raise ConfigError("scan period must exceed the worst-case scan span")
        if self.t_cp_ns > self.t_slsw_ns:
            raise ConfigError("t_cp must not exceed t_slsw")


@dataclass(frozen=True)
class TxBeaconConfig:
    device_id: int
    period_ns: int
    t_ss_ns: int = NS_PER_MS
    first_at_local_ns: int = 0
    cycle_ns: Optional[int] = None  # advertised in the payload when set

    def __post_init__(self) -> None:
        if self.period_ns <= 0:
            raise ConfigError("beacon period must be positive")


@dataclass(frozen=True)
class RxBeaconConfig:
    device_id: int
    t_rsp_ns: int = NS_PER_MS
    chunk_ns: int = 10 * 1_000_000_000
    first_at_local_ns: int = 0

    def __post_init__(self) -> None:
        if self.chunk_ns <= 0:
            raise ConfigError("listen chunk must be positive")


RoleConfig = Union[FlexiSrcConfig, FlexiDstConfig, TxBeaconConfig, RxBeaconConfig]


@dataclass(frozen=True)
class DeviceConfig:
    """Identity, radio, and clock parameters of one simulated device."""

    device_id: int
    imsi: int
    role_config: RoleConfig
    radio: RadioPowerProfile = RadioPowerProfile()
    sl_drx_cycle_ns: int = 1_280 * NS_PER_MS
    coverage: Coverage = Coverage.HC
    power_class_name: str = "PC2"
    drift_ppm: float = 0.0
    initial_offset_ns: Union[int, tuple[int, int]] = 0  # fixed, or (lo, hi) drawn per seed
    position_m: tuple[float, float] = (0.0, 0.0)
    busy_ns: tuple[tuple[int, int], ...] = ()  # primary-RAT intervals, radio unavailable
    eps_coarse_ns: int = 0  # residual error of the coarse sync source

    def __post_init__(self) -> None:
        if self.sl_drx_cycle_ns < PO_LEN_NS or self.sl_drx_cycle_ns % PO_LEN_NS != 0:
            raise ConfigError("sl_drx_cycle must be a positive multiple of 1 ms")


# ---------------------------------------------------------------------------
# Events and actions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimerFired:
    tag: str
    serial: int = 0


@dataclass(frozen=True)
class MessageReceived:
    msg: Message
    arrival_local_ns: int  # receiver-local time at reception start
    flight_ns: int = 0     # actual propagation delay (used only with ranging)


@dataclass(frozen=True)
class DataArrived:
    pass


Event = Union[TimerFired, MessageReceived, DataArrived]


@dataclass(frozen=True)
class Transmit:
    msg: Message
    at_local_ns: int


@dataclass(frozen=True)
class Listen:
    start_local_ns: int
    end_local_ns: int
    label: str


@dataclass(frozen=True)
class SetTimer:
    at_local_ns: int
    tag: str
    serial: int = 0


@dataclass(frozen=True)
class ResyncClock:
    delta_ns: int


@dataclass(frozen=True)
class ReportSync:
    peer_id: int
    success: bool
    attempts: int


@dataclass(frozen=True)
class ReportData:
    peer_id: int
    ok: bool
    misalign_ns: int


@dataclass(frozen=True)
class Sleep:
    pass


Action = Union[Transmit, Listen, SetTimer, ResyncClock, ReportSync, ReportData, Sleep]

#: how long after a sync signal's end a chained request is still considered
#: back-to-back with it
SLSS_CHAIN_TOLERANCE_NS = 100_000


def _req_follows_slss(state: RoleState, msg: Message, arrival_local_ns: int) -> bool:
    return (
        state.slss_from == msg.src_id
        and 0 <= arrival_local_ns - state.slss_end_local_ns <= SLSS_CHAIN_TOLERANCE_NS
    )


@dataclass(frozen=True)
class PeerTiming:
    peer_id: int
    imsi: int
    sl_drx_cycle_ns: Optional[int]
    learned_at_local_ns: int
    fine: bool


@dataclass(frozen=True)
class RoleState:
    role: Role
    phase: str
    attempt: int = 0
    peer_timing: Optional[PeerTiming] = None
    anchor_ns: Optional[int] = None    # sweep anchor (src) / round start (periodic dst)
    armed_po_ns: Optional[int] = None  # duty listen replaced by an armed sync window
    synced_round: bool = False
    attempt_serial: int = 0
    duty_serial: int = 0
    round_serial: int = 0
    # a timing request is demodulable only right after its sender's sync
    # signal was decoded; track who that was and when the signal ended
    slss_from: Optional[int] = None
    slss_end_local_ns: int = 0


@dataclass(frozen=True)
class StepContext:
    now_local_ns: int
    cfg: RoleConfig


# ---------------------------------------------------------------------------
# Machine bootstrap
# ---------------------------------------------------------------------------

def start_role(cfg: RoleConfig, now_local_ns: int) -> tuple[RoleState, tuple[Action, ...]]:
    """Initial state and actions for a device's role at its local `now`."""
    if isinstance(cfg, FlexiSrcConfig):
        timing = None
        if cfg.initial_fine:
            timing = PeerTiming(cfg.peer_id, cfg.peer_imsi, cfg.peer_cycle_ns,
                                now_local_ns, fine=True)
        return RoleState(Role.FLEXI_SRC, "idle", peer_timing=timing), (Sleep(),)
    if isinstance(cfg, FlexiDstConfig):
        state = RoleState(Role.FLEXI_DST, "duty")
        if cfg.ssw_mode == "periodic":
            first = max(cfg.first_round_local_ns, now_local_ns)
            return state, (SetTimer(first, "round", 0),)
        actions = _dst_duty_actions(state, cfg, now_local_ns)
        return state, tuple(actions) if actions else (Sleep(),)
    if isinstance(cfg, TxBeaconConfig):
        first = max(cfg.first_at_local_ns, now_local_ns)
        return RoleState(Role.TX_BEACON, "beaconing"), (SetTimer(first, "beacon", 0),)
    if isinstance(cfg, RxBeaconConfig):
        first = max(cfg.first_at_local_ns, now_local_ns)
        state = RoleState(Role.RX_BEACON, "listening")
        return state, (
            Listen(first, first + cfg.chunk_ns, "beacon_standby"),
            SetTimer(first + cfg.chunk_ns, "rearm", 0),
        )
    raise ConfigError(f"unknown role config {type(cfg).__name__}")


# ---------------------------------------------------------------------------
# Transition function
# ---------------------------------------------------------------------------

def step(
    state: RoleState, event: Event, ctx: StepContext
) -> tuple[RoleState, tuple[Action, ...]]:
    """Apply one event to a role state; returns the successor state and the
    actions the simulation loop must carry out."""
    if state.role is Role.FLEXI_SRC:
        return _step_flexi_src(state, event, ctx)
    if state.role is Role.FLEXI_DST:
        return _step_flexi_dst(state, event, ctx)
    if state.role is Role.TX_BEACON:
        return _step_tx_beacon(state, event, ctx)
    if state.role is Role.RX_BEACON:
        return _step_rx_beacon(state, event, ctx)
    raise ProtocolError(f"unknown role {state.role}")


def _addressed_to_us(msg: Message, device_id: int) -> bool:
    return msg.dst_id is None or msg.dst_id == device_id


# ----------------------------- flexi source -------------------------------

def _src_fine_now(state: RoleState, cfg: FlexiSrcConfig, now: int) -> bool:
    pt = state.peer_timing
    if pt is None or not pt.fine:
        return False
    return now - pt.learned_at_local_ns <= cfg.fine_validity_ns


def _src_data_actions(cfg: FlexiSrcConfig, now: int) -> list[Action]:
    """Schedule the data transmission on the peer's next paging occasion.
    With ranging the start is advanced by the known flight time so the data
    lands on the slot boundary in the receiver's frame."""
    po = next_sl_po(cfg.peer_imsi, cfg.peer_cycle_ns, now + cfg.data_guard_ns)
    target = po.start_ns
    at = target - (cfg.known_flight_ns if cfg.ranging else 0)
    msg = Message(
        MessageKind.SL_DATA,
        cfg.device_id,
        cfg.peer_id,
        cfg.data_duration_ns,
        TimingPayload(at, cfg.device_id, None, target_slot_ns=target),
    )
    return [Transmit(msg, at)]


def _src_prompt_data_actions(cfg: FlexiSrcConfig, now: int) -> list[Action]:
    """Data right after a completed handshake, in the slots the receiver is
    already awake for; waiting for the next paging occasion would let the
    clocks drift back out of the cyclic prefix."""
    target = now + cfg.data_guard_ns
    at = target - (cfg.known_flight_ns if cfg.ranging else 0)
    msg = Message(
        MessageKind.SL_DATA,
        cfg.device_id,
        cfg.peer_id,
        cfg.data_duration_ns,
        TimingPayload(at, cfg.device_id, None, target_slot_ns=target),
    )
    return [Transmit(msg, at)]


def _src_attempt_actions(
    state: RoleState, cfg: FlexiSrcConfig, attempt: int, serial: int
) -> list[Action]:
    assert state.anchor_ns is not None
    c = state.anchor_ns + (attempt - 1) * cfg.sweep_step_ns
    dst = None if cfg.broadcast_slss else cfg.peer_id
    actions: list[Action] = [
        Transmit(
            Message(
                MessageKind.SLSS,
                cfg.device_id,
                dst,
                cfg.t_ss_ns,
                TimingPayload(c, cfg.device_id, None),
                piggyback_req=cfg.piggyback_req,
            ),
            c,
        )
    ]
    req_end = c + cfg.t_ss_ns
    if not cfg.piggyback_req:
        actions.append(
            Transmit(
                Message(MessageKind.TIME_REQ, cfg.device_id, dst, cfg.t_req_ns),
                req_end,
            )
        )
        req_end += cfg.t_req_ns
    actions.append(Listen(req_end, req_end + cfg.t_rsp_ns, "rsp_listen"))
    actions.append(SetTimer(req_end + cfg.t_rsp_ns + cfg.attempt_slack_ns, "attempt", serial))
    return actions


def _step_flexi_src(
    state: RoleState, event: Event, ctx: StepContext
) -> tuple[RoleState, tuple[Action, ...]]:
    cfg = ctx.cfg
    assert isinstance(cfg, FlexiSrcConfig)
    now = ctx.now_local_ns

    if isinstance(event, DataArrived):
        if state.phase != "idle":
            raise ProtocolError("data arrived while a sync round is still in progress")
        if cfg.mode == "direct" or (cfg.mode == "handshake" and _src_fine_now(state, cfg, now)):
            return state, tuple(_src_data_actions(cfg, now))
        if cfg.mode == "oneway":
            # sync signal immediately ahead of the data, no handshake
            po = next_sl_po(cfg.peer_imsi, cfg.peer_cycle_ns, now + cfg.arm_guard_ns)
            target = po.start_ns
            at = target - (cfg.known_flight_ns if cfg.ranging else 0)
            dst = None if cfg.broadcast_slss else cfg.peer_id
            slss = Message(
                MessageKind.SLSS, cfg.device_id, dst, cfg.t_ss_ns,
                TimingPayload(at - cfg.t_ss_ns, cfg.device_id, None),
            )
            data = Message(
                MessageKind.SL_DATA, cfg.device_id, cfg.peer_id, cfg.data_duration_ns,
                TimingPayload(at, cfg.device_id, None, target_slot_ns=target),
            )
            return state, (Transmit(slss, at - cfg.t_ss_ns), Transmit(data, at))
        # handshake sweep
        if cfg.sweep_anchor == "po":
            po = next_sl_po(cfg.peer_imsi, cfg.peer_cycle_ns, now + cfg.arm_guard_ns)
            anchor = po.start_ns + PO_LEN_NS // 2 + cfg.sweep_lo_ns
        else:
            anchor = now + cfg.arm_guard_ns
        serial = state.attempt_serial + 1
        next_state = replace(
            state, phase="sweeping", attempt=1, anchor_ns=anchor, attempt_serial=serial
        )
        return next_state, tuple(_src_attempt_actions(next_state, cfg, 1, serial))

    if isinstance(event, TimerFired):
        if event.tag != "attempt":
            raise ProtocolError(f"flexi source got unknown timer {event.tag!r}")
        if event.serial != state.attempt_serial:
            return state, ()  # cancelled
        if state.phase != "sweeping":
            raise ProtocolError("live attempt timer outside a sweep")
        if state.attempt < cfg.n_attempts:
            serial = state.attempt_serial + 1
            next_state = replace(state, attempt=state.attempt + 1, attempt_serial=serial)
            return next_state, tuple(
                _src_attempt_actions(next_state, cfg, next_state.attempt, serial)
            )
        failed = replace(
            state, phase="idle", attempt_serial=state.attempt_serial + 1, anchor_ns=None
        )
        return failed, (ReportSync(cfg.peer_id, False, state.attempt),)

    if isinstance(event, MessageReceived):
        msg = event.msg
        if msg.kind is MessageKind.SLSS or not _addressed_to_us(msg, cfg.device_id):
            return state, ()  # cross traffic; this role never acts on sync signals
        if msg.kind is MessageKind.TIME_RSP:
            if state.phase != "sweeping":
                raise ProtocolError("timing response outside a sweep")
            assert msg.timing_payload is not None
            timing = PeerTiming(
                msg.src_id,
                msg.timing_payload.sender_id,
                msg.timing_payload.sl_drx_cycle_ns,
                now,
                fine=True,
            )
            actions: list[Action] = []
            local_now = now
            if cfg.resync_from_rsp:
                comp = event.flight_ns if cfg.ranging else 0
                delta = msg.timing_payload.sender_local_ns + comp - event.arrival_local_ns
                actions.append(ResyncClock(delta))
                local_now = now + delta
            actions.append(ReportSync(msg.src_id, True, state.attempt))
            if cfg.data_duration_ns > 0:
                actions.extend(_src_prompt_data_actions(cfg, local_now))
            synced = replace(
                state,
                phase="idle",
                peer_timing=timing,
                anchor_ns=None,
                attempt_serial=state.attempt_serial + 1,
            )
            return synced, tuple(actions)
        if msg.kind is MessageKind.TIME_REQ:
            return state, ()  # requests are for receivers and beacons
        raise ProtocolError(f"flexi source cannot handle {msg.kind} in phase {state.phase}")

    raise ProtocolError(f"unhandled event {event!r}")


# ---------------------------- flexi destination ----------------------------

def _dst_duty_actions(state: RoleState, cfg: FlexiDstConfig, after_local_ns: int) -> list[Action]:
    """One duty-cycle step: listen on the next paging occasion (or the sync
    window that replaces it) and re-arm the duty timer."""
    if cfg.ssw_mode == "periodic" or not cfg.po_duty:
        return []
    po = next_sl_po(cfg.own_imsi, cfg.cycle_ns, after_local_ns)
    actions: list[Action] = []
    if cfg.ssw_mode == "always":
        w = ssw_for_po(po, cfg.ssw_len_ns, cfg.ssw_alignment)
        if w.start_ns < after_local_ns:  # window head already in the past; take the next cycle
            po = next_sl_po(cfg.own_imsi, cfg.cycle_ns, po.start_ns)
            w = ssw_for_po(po, cfg.ssw_len_ns, cfg.ssw_alignment)
        actions.append(Listen(w.start_ns, w.end_ns, "ssw"))
    elif state.armed_po_ns == po.start_ns:
        pass  # an armed sync window already covers this occasion
    else:
        actions.append(Listen(po.start_ns, po.end_ns, "sl_po"))
    actions.append(SetTimer(po.start_ns, "duty", state.duty_serial))
    return actions


def _dst_resync(
    state: RoleState, cfg: FlexiDstConfig, event: MessageReceived
) -> tuple[RoleState, list[Action], int]:
    """Clock correction from a decoded sync signal; restarts the duty chain
    in the shifted frame. Returns (state, actions, delta)."""
    payload = event.msg.timing_payload
    if payload is None:
        raise ProtocolError("sync signal without timing payload")
    comp = event.flight_ns if cfg.ranging else 0
    delta = payload.sender_local_ns + comp - event.arrival_local_ns
    actions: list[Action] = [ResyncClock(delta)]
    new_state = state
    if cfg.ssw_mode != "periodic" and cfg.po_duty:
        new_serial = state.duty_serial + 1
        new_state = replace(state, duty_serial=new_serial, armed_po_ns=None)
        now_after = event.arrival_local_ns + delta + event.msg.duration_ns
        actions.extend(_dst_duty_actions(new_state, cfg, now_after))
    return new_state, actions, delta


def _dst_rsp_action(cfg: FlexiDstConfig, requester: int, at_local_ns: int) -> Transmit:
    return Transmit(
        Message(
            MessageKind.TIME_RSP,
            cfg.device_id,
            requester,
            cfg.t_rsp_ns,
            TimingPayload(at_local_ns, cfg.device_id, cfg.cycle_ns),
        ),
        at_local_ns,
    )


def _step_flexi_dst(
    state: RoleState, event: Event, ctx: StepContext
) -> tuple[RoleState, tuple[Action, ...]]:
    cfg = ctx.cfg
    assert isinstance(cfg, FlexiDstConfig)
    now = ctx.now_local_ns

    if isinstance(event, TimerFired):
        if event.tag == "duty":
            if event.serial != state.duty_serial:
                return state, ()
            cleared = state
            if state.armed_po_ns is not None and state.armed_po_ns <= now:
                cleared = replace(state, armed_po_ns=None)
            return cleared, tuple(_dst_duty_actions(cleared, cfg, now))
        if event.tag == "round":
            if event.serial != state.round_serial:
                return state, ()
            opened = replace(state, attempt=1, synced_round=False, anchor_ns=now)
            return opened, (
                Listen(now, now + cfg.ssw_len_ns, "ssw"),
                SetTimer(now + cfg.ssw_len_ns, "win_end", state.round_serial),
            )
        if event.tag == "win_end":
            if event.serial != state.round_serial:
                return state, ()
            if state.synced_round or state.attempt >= cfg.scan_max_attempts:
                report: tuple[Action, ...] = ()
                if not state.synced_round:
                    report = (ReportSync(-1, False, state.attempt),)
                assert state.anchor_ns is not None
                nxt = max(state.anchor_ns + cfg.period_ns, now)  # anchored rounds
                rounded = replace(state, round_serial=state.round_serial + 1)
                return rounded, report + (SetTimer(nxt, "round", rounded.round_serial),)
            retry = replace(state, attempt=state.attempt + 1)
            start = now + cfg.scan_retry_gap_ns
            return retry, (
                Listen(start, start + cfg.ssw_len_ns, "ssw"),
                SetTimer(start + cfg.ssw_len_ns, "win_end", state.round_serial),
            )
        raise ProtocolError(f"flexi destination got unknown timer {event.tag!r}")

    if isinstance(event, DataArrived):
        if cfg.ssw_mode != "per_data":
            raise ProtocolError("rendezvous arming requires per-data ssw mode")
        po = next_sl_po(cfg.own_imsi, cfg.cycle_ns, now + cfg.arm_guard_ns)
        w = ssw_for_po(po, cfg.ssw_len_ns, cfg.ssw_alignment)
        armed = replace(state, armed_po_ns=po.start_ns)
        return armed, (Listen(w.start_ns, w.end_ns, "ssw"),)

    if isinstance(event, MessageReceived):
        msg = event.msg
        if msg.kind is MessageKind.SLSS:
            if not slss_matches(msg, cfg.device_id):
                return state, ()  # rejected false alarm
            if cfg.ssw_mode == "periodic":
                if state.synced_round:
                    return state, ()  # already tracked a beacon this round
                new_state, actions, _ = _dst_resync(state, cfg, event)
                new_state = replace(new_state, synced_round=True)
                actions.append(ReportSync(msg.src_id, True, max(state.attempt, 1)))
                return new_state, tuple(actions)
            new_state, actions, delta = _dst_resync(state, cfg, event)
            new_state = replace(
                new_state,
                slss_from=msg.src_id,
                slss_end_local_ns=event.arrival_local_ns + delta + msg.duration_ns,
            )
            if msg.piggyback_req:
                rsp_at = event.arrival_local_ns + delta + msg.duration_ns
                actions.append(_dst_rsp_action(cfg, msg.src_id, rsp_at))
                wait = rsp_at + cfg.t_rsp_ns
                actions.append(Listen(wait, wait + cfg.data_wait_ns, "data_wait"))
            return new_state, tuple(actions)
        if not _addressed_to_us(msg, cfg.device_id):
            return state, ()  # overheard traffic for someone else
        if msg.kind is MessageKind.TIME_REQ:
            if not _req_follows_slss(state, msg, event.arrival_local_ns):
                return state, ()  # no symbol timing for this sender; undecodable
            wait = now + cfg.t_rsp_ns
            return replace(state, slss_from=None), (
                _dst_rsp_action(cfg, msg.src_id, now),
                Listen(wait, wait + cfg.data_wait_ns, "data_wait"),
            )
        if msg.kind is MessageKind.SL_DATA:
            payload = msg.timing_payload
            if payload is None or payload.target_slot_ns is None:
                raise ProtocolError("data without a target slot cannot be aligned")
            mis = event.arrival_local_ns - payload.target_slot_ns
            level = classify_sync(abs(mis), cfg.t_cp_ns, cfg.t_slsw_ns)
            return state, (ReportData(msg.src_id, level is SyncLevel.FINE, mis),)
        raise ProtocolError(f"flexi destination cannot handle {msg.kind}")

    raise ProtocolError(f"unhandled event {event!r}")


# ------------------------------- tx beacon --------------------------------

def _step_tx_beacon(
    state: RoleState, event: Event, ctx: StepContext
) -> tuple[RoleState, tuple[Action, ...]]:
    cfg = ctx.cfg
    assert isinstance(cfg, TxBeaconConfig)
    now = ctx.now_local_ns
    if isinstance(event, TimerFired):
        if event.tag != "beacon":
            raise ProtocolError(f"tx beacon got unknown timer {event.tag!r}")
        msg = Message(
            MessageKind.SLSS,
            cfg.device_id,
            None,
            cfg.t_ss_ns,
            TimingPayload(now, cfg.device_id, cfg.cycle_ns),
        )
        return state, (Transmit(msg, now), SetTimer(now + cfg.period_ns, "beacon", 0))
    # a tx beacon never listens, so inbound traffic means the scheduler broke
    raise ProtocolError(f"tx beacon cannot handle {event!r}")


# ------------------------------- rx beacon --------------------------------

def _step_rx_beacon(
    state: RoleState, event: Event, ctx: StepContext
) -> tuple[RoleState, tuple[Action, ...]]:
    cfg = ctx.cfg
    assert isinstance(cfg, RxBeaconConfig)
    now = ctx.now_local_ns
    if isinstance(event, TimerFired):
        if event.tag != "rearm":
            raise ProtocolError(f"rx beacon got unknown timer {event.tag!r}")
        return state, (
            Listen(now, now + cfg.chunk_ns, "beacon_standby"),
            SetTimer(now + cfg.chunk_ns, "rearm", 0),
        )
    if isinstance(event, MessageReceived):
        msg = event.msg
        if msg.kind is MessageKind.SLSS and slss_matches(msg, cfg.device_id):
            if msg.piggyback_req:
                return state, (_rx_beacon_rsp(cfg, msg.src_id, now),)
            return (
                replace(state, slss_from=msg.src_id,
                        slss_end_local_ns=event.arrival_local_ns + msg.duration_ns),
                (),
            )
        if msg.kind is MessageKind.TIME_REQ and _addressed_to_us(msg, cfg.device_id):
            if not _req_follows_slss(state, msg, event.arrival_local_ns):
                return state, ()  # no symbol timing for this sender; undecodable
            return replace(state, slss_from=None), (_rx_beacon_rsp(cfg, msg.src_id, now),)
        return state, ()  # cross traffic passes through
    raise ProtocolError(f"rx beacon cannot handle {event!r}")


def _rx_beacon_rsp(cfg: RxBeaconConfig, requester: int, at_local_ns: int) -> Transmit:
    return Transmit(
        Message(
            MessageKind.TIME_RSP,
            cfg.device_id,
            requester,
            cfg.t_rsp_ns,
            TimingPayload(at_local_ns, cfg.device_id, None),
        ),
        at_local_ns,
    )


__all__ = [
    "PO_LEN_NS",
    "Action",
    "Coverage",
    "DataArrived",
    "DeviceConfig",
    "Event",
    "FlexiDstConfig",
    "FlexiSrcConfig",
    "Listen",
    "Message",
    "MessageKind",
    "MessageReceived",
    "PeerTiming",
    "ReportData",
    "ReportSync",
    "ResyncClock",
    "Role",
    "RoleConfig",
    "RoleState",
    "RxBeaconConfig",
    "ScheduleSlot",
    "SetTimer",
    "Sleep",
    "SlotKind",
    "StepContext",
    "TimerFired",
    "TimingPayload",
    "Transmit",
    "TxBeaconConfig",
    "expected_attempts",
    "next_sl_po",
    "slss_matches",
    "ssw_for_po",
    "start_role",
    "step",
]
