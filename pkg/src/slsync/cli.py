"""Command-line front end: analytic sweeps, simulation runs, battery-life
reports, and canned figure-data reproduction.

All numeric output uses 9 significant digits; durations on the wire are
integer nanoseconds and powers are watts (column suffixes ``_ns`` / ``_w``),
so milliwatt-versus-watt ambiguity cannot arise. Exit codes: 0 success,
2 configuration error, 3 protocol violation during simulation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import netsim
from .config import (
    MethodParams,
    ScenarioConfig,
    build_scenario,
    parse_config,
    parse_duration_ns,
)
from .errors import ConfigError, ProtocolError
from .power_model import (
    battery_life_days,
    beacon_power_threshold,
    p_dst_flexi,
    p_rx_beacon,
    p_src_flexi,
    p_tx_beacon,
)
from .protocol import Role
from .timebase import NS_PER_S

#: sweep axes: name -> (params field, kind); duration sweep values are given
#: in seconds, powers in watts
SWEEP_AXES = {
    "n_attempts": ("n_attempts", "int"),
    "t_sync": ("t_sync_ns", "duration_s"),
    "t_win": ("t_win_ns", "duration_s"),
    "t_data": ("t_data_ns", "duration_s"),
    "p_tx": ("p_tx_w", "power_w"),
    "p_rx": ("p_rx_w", "power_w"),
}

ANALYTIC_COLUMNS = (
    "p_src_w",
    "p_dst_w",
    "p_rx_beacon_w",
    "p_tx_beacon_w",
    "p_bth_w",
    "battery_days",
)


def _g(x: float) -> str:
    return format(x, ".9g")


def _axis_column(axis: str) -> str:
    kind = SWEEP_AXES[axis][1]
    if kind == "duration_s":
        return f"{axis}_ns"
    if kind == "power_w":
        return f"{axis}_w"
    return axis


def parse_sweep(spec: str) -> tuple[str, list]:
    """``AXIS=START:STOP:STEPS`` (inclusive linear grid) or an explicit
    ``AXIS=v1,v2,...`` list. Duration axes take seconds, power axes watts."""
    if "=" not in spec:
        raise ConfigError("sweep must look like AXIS=START:STOP:STEPS or AXIS=v1,v2,...")
    axis, _, rhs = spec.partition("=")
    axis = axis.strip()
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    _, kind = SWEEP_AXES[axis]

    def convert(token: str):
        token = token.strip()
        try:
            if kind == "int":
                return int(token)
            return float(token)
        except ValueError as exc:
            raise ConfigError(f"bad sweep value {token!r} for axis {axis}") from exc

    if ":" in rhs:
        parts = rhs.split(":")
        if len(parts) != 3:
            raise ConfigError("range sweep must be START:STOP:STEPS")
        start, stop = convert(parts[0]), convert(parts[1])
        try:
            steps = int(parts[2])
        except ValueError as exc:
            raise ConfigError("sweep STEPS must be an integer") from exc
        if steps < 2:
            raise ConfigError("a sweep needs at least 2 points")
        values = [start + (stop - start) * i / (steps - 1) for i in range(steps)]
        if kind == "int":
            values = [int(round(v)) for v in values]
    else:
        values = [convert(t) for t in rhs.split(",") if t.strip()]
        if len(values) < 1:
            raise ConfigError("empty sweep value list")
    return axis, values


def _apply_axis(params: MethodParams, axis: str, value) -> MethodParams:
    fieldname, kind = SWEEP_AXES[axis]
    if kind == "int":
        return replace(params, **{fieldname: int(value)})
    if kind == "duration_s":
        return replace(params, **{fieldname: int(round(value * NS_PER_S))})
    return replace(params, **{fieldname: float(value)})


def _axis_value_repr(params: MethodParams, axis: str) -> str:
    fieldname, kind = SWEEP_AXES[axis]
    raw = getattr(params, fieldname)
    if kind == "int":
        return str(raw)
    if kind == "duration_s":
        return str(int(raw))
    return _g(float(raw))


def analytic_row(params: MethodParams, battery_model) -> list[str]:
    """One report row evaluated purely from the closed forms. Beacon columns
    use the window sized to the configured error budget; flexi columns use
    the configured window."""
    profile = params.profile()
    flexi = params.flexi()
    beacon = params.beacon(optimal_window=True)
    p_src = p_src_flexi(profile, flexi)
    p_dst = p_dst_flexi(profile, flexi)
    p_rxb = p_rx_beacon(profile, beacon)
    p_txb = p_tx_beacon(profile, beacon)
    p_bth, _ = beacon_power_threshold(profile.p_rx_w, beacon)
    days = battery_life_days(battery_model, p_src + p_dst)
    return [_g(p_src), _g(p_dst), _g(p_rxb), _g(p_txb), _g(p_bth), _g(days)]


def cmd_analytic(cfg: ScenarioConfig, sweep: Optional[str]) -> str:
    axis, values = parse_sweep(sweep) if sweep else ("n_attempts", [cfg.params.n_attempts])
    battery_model = cfg.battery.model()
    lines = [",".join([_axis_column(axis), *ANALYTIC_COLUMNS])]
    for v in values:
        params = _apply_axis(cfg.params, axis, v)
        lines.append(",".join([_axis_value_repr(params, axis),
                               *analytic_row(params, battery_model)]))
    return "\n".join(lines) + "\n"


def _role_name(role_config) -> str:
    from . import protocol as proto

    if isinstance(role_config, proto.FlexiSrcConfig):
        return Role.FLEXI_SRC.value
    if isinstance(role_config, proto.FlexiDstConfig):
        return Role.FLEXI_DST.value
    if isinstance(role_config, proto.TxBeaconConfig):
        return Role.TX_BEACON.value
    return Role.RX_BEACON.value


def cmd_simulate(cfg: ScenarioConfig, seed: Optional[int],
                 horizon_ns: Optional[int], trace_path: Optional[Path]) -> str:
    built = build_scenario(cfg)
    use_seed = cfg.seed if seed is None else seed
    use_horizon = built.horizon_ns if horizon_ns is None else horizon_ns
    result = netsim.run(built.scenario, use_seed, use_horizon,
                        trace=trace_path is not None)
    if trace_path is not None:
        trace_path.write_text(result.trace_text())
    expected = {built.src_id: built.expected_src_w, built.dst_id: built.expected_dst_w}
    by_id = {d.device_id: d for d in built.scenario.devices}
    header = ("device_id,role,avg_power_w,sync_overhead_w,analytic_w,rel_err,"
              "sync_ok,sync_fail,data_ok,data_fail,sync_failure")
    lines = [header]
    stats_by_src = {s.src: s for s in result.flow_stats}
    stats_by_dst = {s.dst: s for s in result.flow_stats}
    for did in sorted(result.ledgers):
        ana = expected.get(did)
        sim = result.sync_overhead_w[did]
        ana_col = _g(ana) if ana is not None else ""
        rel_col = _g(abs(sim - ana) / ana) if ana else ""
        st = stats_by_src.get(did) or stats_by_dst.get(did)
        flow_cols = (
            [str(st.sync_ok), str(st.sync_fail), str(st.data_ok), str(st.data_fail),
             str(int(st.sync_failure))]
            if st is not None
            else ["0", "0", "0", "0", "0"]
        )
        lines.append(",".join([
            str(did),
            _role_name(by_id[did].role_config),
            _g(result.avg_power_w[did]),
            _g(sim),
            ana_col,
            rel_col,
            *flow_cols,
        ]))
    return "\n".join(lines) + "\n"


def cmd_battery(cfg: ScenarioConfig) -> str:
    profile = cfg.params.profile()
    flexi = cfg.params.flexi()
    model = cfg.battery.model()
    overhead = p_src_flexi(profile, flexi) + p_dst_flexi(profile, flexi)
    legacy = battery_life_days(model, 0.0)
    with_sync = battery_life_days(model, overhead)
    reduction_pct = (legacy - with_sync) / legacy * 100.0
    return (
        f"legacy_days={_g(legacy)}\n"
        f"flexi_days={_g(with_sync)}\n"
        f"sync_overhead_w={_g(overhead)}\n"
        f"reduction_pct={_g(reduction_pct)}\n"
    )


def cmd_reproduce(figure: str) -> str:
    base = ScenarioConfig()
    if figure == "fig5":
        return cmd_analytic(base, "n_attempts=1,2,3,4,5,6,7,8,9,10")
    if figure == "fig6a":
        values = ",".join(str(v) for v in range(50, 1001, 50))
        return cmd_analytic(base, f"t_sync={values}")
    if figure == "fig6b":
        values = ",".join(_g(i / 100) for i in range(0, 31))
        return cmd_analytic(base, f"p_tx={values}")
    if figure == "battery":
        cfg = replace(base, params=replace(base.params, n_attempts=4))
        profile = cfg.params.profile()
        flexi = cfg.params.flexi()
        overhead = p_src_flexi(profile, flexi) + p_dst_flexi(profile, flexi)
        lines = ["capacity_wh,legacy_days,flexi_days,reduction_pct"]
        for cap in (1.0, 5.0, 20.0):
            model = replace(cfg.battery, capacity_wh=cap).model()
            legacy = battery_life_days(model, 0.0)
            with_sync = battery_life_days(model, overhead)
            red = (legacy - with_sync) / legacy * 100.0
            lines.append(",".join([_g(cap), _g(legacy), _g(with_sync), _g(red)]))
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown figure {figure!r}; choose fig5, fig6a, fig6b, or battery")


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _load_config(path: Optional[str]) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    return parse_config(Path(path))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slsync",
        description="Sidelink sync power models and deterministic rendezvous simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analytic", help="closed-form sweep, no simulation")
    p_an.add_argument("--config", help="JSON scenario config")
    p_an.add_argument("--sweep", help="AXIS=START:STOP:STEPS or AXIS=v1,v2,... "
                                      "(durations in seconds, powers in watts)")
    p_an.add_argument("--out", help="write CSV here instead of stdout")

    p_sim = sub.add_parser("simulate", help="run the discrete-event simulator")
    p_sim.add_argument("--config", help="JSON scenario config")
    p_sim.add_argument("--seed", type=int, help="override the config seed")
    p_sim.add_argument("--horizon", help="override horizon (ns or e.g. '200s')")
    p_sim.add_argument("--out", help="write summary CSV here instead of stdout")
    p_sim.add_argument("--trace", help="also write the full event trace to this file")

    p_bat = sub.add_parser("battery", help="battery-life projection")
    p_bat.add_argument("--config", help="JSON scenario config")
    p_bat.add_argument("--out", help="write the report here instead of stdout")

    p_rep = sub.add_parser("reproduce", help="canned figure-data sweeps")
    p_rep.add_argument("--figure", required=True,
                       choices=["fig5", "fig6a", "fig6b", "battery"])
    p_rep.add_argument("--out", help="write CSV here instead of stdout")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analytic":
            cfg = _load_config(args.config)
            text = cmd_analytic(cfg, args.sweep)
        elif args.command == "simulate":
            cfg = _load_config(args.config)
            horizon = None if args.horizon is None else parse_duration_ns(args.horizon, "--horizon")
            trace = None if args.trace is None else Path(args.trace)
            text = cmd_simulate(cfg, args.seed, horizon, trace)
        elif args.command == "battery":
            cfg = _load_config(args.config)
            text = cmd_battery(cfg)
        else:
            text = cmd_reproduce(args.figure)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        print(f"protocol violation: {exc}", file=sys.stderr)
        return 3
    _emit(text, None if args.out is None else Path(args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
