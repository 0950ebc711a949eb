"""Command line front end for the experiment suite.

Every subcommand writes CSV files into the output directory; ``--chart``
additionally renders SVG views of the same data.  Exit codes: 0 success,
1 bad usage or configuration, 2 runtime failure, 3 verification failure
(oracle-check found a discrepancy).

Configuration files are flat ``key = value`` text: keys are either
protocol parameter field names (see ``dcfsim.params.WifiParams``) or
experiment settings such as ``stations``, ``reps``, ``seed`` and ``out``.
Command line flags take precedence over the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import analysis, csvio, engine
from .deltaq import ks_distance, write_cdf_csv
from .exact import BudgetExceededError, unroll_transient
from .params import (
    ConfigError,
    WIFI_FIELD_NAMES,
    apply_overrides,
    parse_flat_config,
    parse_wifi_value,
    preset,
)

__all__ = ["main", "UsageError"]

DEFAULT_PRESET = "bianchi-802.11b"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_stations(raw: str) -> list[int]:
    """Accept "5", "1,2,5" or "1..9"."""
    raw = raw.strip()
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty station range {raw!r}")
        return list(range(lo, hi + 1))
    return [int(part) for part in raw.split(",")]


def _parse_sizes(raw: str) -> list[int]:
    """``start:stop:step`` inclusive, or a comma list."""
    raw = raw.strip()
    if ":" in raw:
        start, stop, step = (int(p) for p in raw.split(":"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad size range {raw!r}")
        return list(range(start, stop + 1, step))
    return [int(part) for part in raw.split(",")]


def _parse_int_list(raw: str) -> list[int]:
    return [int(part) for part in raw.split(",")]


def _parse_float_list(raw: str) -> list[float]:
    return [float(part) for part in raw.split(",")]


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


_EXPERIMENT_PARSERS = {
    "preset": str,
    "experiment": str,
    "stations": _parse_stations,
    "reps": int,
    "outcomes": int,
    "seed": int,
    "out": str,
    "chart": _parse_bool,
    "workers": int,
    "sizes": _parse_sizes,
    "windows": _parse_int_list,
    "fast_rates": _parse_float_list,
    "runs": int,
    "mode": str,
    "q": float,
    "slow_rate": float,
}


def _load_config(path: str | None, command: str):
    """Split a config file into parameter overrides and experiment settings."""
    wifi: dict = {}
    experiment: dict = {}
    if path is None:
        return wifi, experiment
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, key, raw in parse_flat_config(text):
        if key in WIFI_FIELD_NAMES:
            wifi[key] = parse_wifi_value(key, raw, lineno)
        elif key in _EXPERIMENT_PARSERS:
            try:
                experiment[key] = _EXPERIMENT_PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    declared = experiment.get("experiment")
    if declared is not None and declared != command:
        raise ConfigError(
            f"config declares experiment {declared!r} but the {command!r} command was invoked"
        )
    return wifi, experiment


class _Context:
    """Flag / config / default resolution for one invocation."""

    def __init__(self, args, command: str):
        self.args = args
        wifi, self.experiment = _load_config(args.config, command)
        name = args.preset or self.experiment.get("preset") or DEFAULT_PRESET
        params = apply_overrides(preset(name), wifi)
        if getattr(args, "packet_size", None) is not None:
            params = dataclasses.replace(params, default_packet_size=args.packet_size)
        if getattr(args, "rate", None) is not None:
            params = dataclasses.replace(params, default_data_rate=args.rate)
        if getattr(args, "rts_cts", False):
            params = dataclasses.replace(params, rts_cts_enabled=True)
        self.params = params
        self.preset_name = name

        seed = args.seed if args.seed is not None else self.experiment.get("seed")
        if seed is None:
            seed = secrets.randbits(32)
            print(f"seed: {seed} (chosen at random; pass --seed to reproduce)")
        self.seed = int(seed)

        self.out = Path(args.out or self.experiment.get("out") or ".")
        self.out.mkdir(parents=True, exist_ok=True)
        self.chart = bool(getattr(args, "chart", False) or self.experiment.get("chart", False))
        self.workers = int(
            getattr(args, "workers", None) or self.experiment.get("workers", 1) or 1
        )

    def knob(self, name: str, default):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.experiment.get(name, default)
        return value

    def single_n(self, default: int) -> int:
        stations = self.knob("stations", [default])
        if len(stations) != 1:
            raise UsageError("this command takes a single station count")
        return stations[0]

    def path(self, name: str) -> Path:
        target = self.out / name
        print(f"wrote {target}")
        return target


def _spaced(values) -> str:
    return " ".join(str(v) for v in values)


# -- subcommands -----------------------------------------------------------


def cmd_ergodic(args) -> int:
    ctx = _Context(args, "ergodic")
    stations = ctx.knob("stations", [5])
    outcomes = ctx.knob("outcomes", 10_000)
    windows = ctx.knob("windows", None)
    if windows:
        all_rows = {}
        for n in stations:
            rows = analysis.window_sweep(
                ctx.params, n, windows, outcomes, seed=(ctx.seed, n)
            )
            all_rows[n] = rows
            csvio.write_window_sweep_csv(rows, ctx.path(f"ergodic_window_sweep_n{n}.csv"))
            print(f"  n={n} total_mbps: {_spaced(round(r.total_mbps, 4) for r in rows)}")
        if ctx.chart:
            from . import charts

            charts.save_line_chart(
                list(windows),
                {f"n={n}": [r.total_mbps for r in rows] for n, rows in all_rows.items()},
                ctx.path("ergodic_window_sweep.svg"),
                xlabel="initial back-off window",
                ylabel="total Mbit/s",
                logx=True,
            )
        return 0
    summary = []
    cdfs = []
    for n in stations:
        res = engine.run_ergodic(ctx.params, n, outcomes, seed=(ctx.seed, n))
        dist = res.per_packet_latency
        p90 = dist.quantile(0.9).value
        bits = 8 * ctx.params.default_packet_size
        mean_lat = float(res.delivered_latencies.mean())
        delivered = res.packets_observed - res.loss_count
        summary.append(
            (
                n,
                res.packets_observed,
                delivered,
                res.loss_count,
                res.loss_fraction,
                mean_lat,
                p90,
                delivered * bits / res.elapsed_us,
            )
        )
        csvio.write_ergodic_dump(res, ctx.path(f"ergodic_samples_n{n}.csv"))
        write_cdf_csv(dist, ctx.path(f"ergodic_latency_cdf_n{n}.csv"))
        cdfs.append((f"n={n}", dist))
        print(
            f"  n={n}: mean latency {mean_lat:.1f} us, p90 {p90:.1f} us, "
            f"loss {res.loss_fraction:.4f}"
        )
    csvio.write_ergodic_summary_csv(summary, ctx.path("ergodic_summary.csv"))
    if ctx.chart:
        from . import charts

        charts.save_cdf_chart(
            cdfs, ctx.path("ergodic_latency_cdf.svg"), title="per-packet latency"
        )
    return 0


def cmd_transient(args) -> int:
    ctx = _Context(args, "transient")
    stations = ctx.knob("stations", list(range(1, 10)))
    reps = ctx.knob("reps", 10_000)
    rows = []
    cdfs = []
    for n in stations:
        res = engine.run_transient(
            ctx.params, n, reps, seed=(ctx.seed, n), workers=ctx.workers
        )
        rows.append((n, res))
        csvio.write_transient_dump(res, ctx.path(f"tte_samples_n{n}.csv"))
        write_cdf_csv(res.deltaq, ctx.path(f"tte_cdf_n{n}.csv"))
        cdfs.append((f"n={n}", res.deltaq))
        print(f"  n={n}: mean TTE {res.mean_tte_us:.1f} us")
    csvio.write_transient_summary_csv(rows, ctx.path("transient_summary.csv"))
    if ctx.chart:
        from . import charts

        charts.save_cdf_chart(cdfs, ctx.path("tte_cdf.svg"), title="time to empty")
    return 0


def cmd_bound(args) -> int:
    ctx = _Context(args, "bound")
    stations = ctx.knob("stations", list(range(1, 8)))
    reps = ctx.knob("reps", 10_000)
    size = ctx.params.default_packet_size
    rows = []
    for n in stations:
        bound = analysis.amsdu_bound(
            ctx.params, n, size, reps, seed=ctx.seed, workers=ctx.workers
        )
        rows.append((size, bound))
        print(
            f"  n={n}: mean TTE {bound.mean_tte_us:.1f} us, "
            f"total {bound.total_mbps:.4f} Mbit/s, per station {bound.per_station_mbps:.4f}"
        )
    csvio.write_bounds_csv(rows, ctx.path("bounds.csv"))
    if ctx.chart:
        from . import charts

        charts.save_line_chart(
            list(stations),
            {
                "total": [b.total_mbps for _, b in rows],
                "per station": [b.per_station_mbps for _, b in rows],
            },
            ctx.path("bounds.svg"),
            xlabel="stations",
            ylabel="Mbit/s",
        )
    return 0


def cmd_rts_heatmap(args) -> int:
    ctx = _Context(args, "rts-heatmap")
    stations = ctx.knob("stations", list(range(2, 9)))
    sizes = ctx.knob("sizes", list(range(100, 9901, 100)))
    reps = ctx.knob("reps", 10_000)
    result = analysis.rts_heatmap(
        ctx.params, stations, sizes, reps, seed=ctx.seed, workers=ctx.workers
    )
    csvio.write_heatmap_csv(result, ctx.path("rts_heatmap.csv"))
    for n in stations:
        crossover = analysis.first_positive_size(result, n)
        where = f"{crossover} bytes" if crossover is not None else "never"
        print(f"  n={n}: handshake starts paying off at {where}")
    if ctx.chart:
        from . import charts

        charts.save_heatmap_chart(
            result.percent_change,
            sizes,
            stations,
            ctx.path("rts_heatmap.svg"),
            xlabel="packet size (bytes)",
            ylabel="stations",
            title="throughput bound change from RTS/CTS (%)",
        )
    return 0


def cmd_tte_compare(args) -> int:
    ctx = _Context(args, "tte-compare")
    n = ctx.single_n(5)
    reps = ctx.knob("reps", 10_000)
    amsdu = getattr(args, "packet_size", None)
    variants = analysis.tte_compare(
        ctx.params, n, reps, seed=ctx.seed, amsdu_size=amsdu, workers=ctx.workers
    )
    curves = []
    for label, res in variants.items():
        write_cdf_csv(res.deltaq, ctx.path(f"tte_compare_{label}.csv"))
        curves.append((label, res.deltaq))
        print(f"  {label}: mean TTE {res.mean_tte_us:.1f} us")
    if ctx.chart:
        from . import charts

        charts.save_cdf_chart(
            curves, ctx.path("tte_compare.svg"), title=f"time to empty, {n} stations"
        )
    return 0


def cmd_anomaly(args) -> int:
    ctx = _Context(args, "anomaly")
    n = ctx.single_n(5)
    reps = ctx.knob("reps", 10_000)
    slow = ctx.knob("slow_rate", 1.0)
    fast = ctx.knob("fast_rates", [2.0, 5.5, 11.0, 24.0, 54.0, 144.0])
    result = analysis.anomaly_experiment(
        ctx.params, n, slow, fast, reps, seed=ctx.seed, workers=ctx.workers
    )
    csvio.write_anomaly_csv(result, ctx.path("anomaly.csv"))
    for row in result.rows:
        print(
            f"  fast rate {row.fast_rate:g}: per-station bound "
            f"{row.per_station_mbps[0]:.4f} Mbit/s"
        )
    if ctx.chart:
        from . import charts

        charts.save_line_chart(
            [row.fast_rate for row in result.rows],
            {"per-station bound": [row.per_station_mbps[0] for row in result.rows]},
            ctx.path("anomaly.svg"),
            xlabel="fast stations' rate (Mbit/s)",
            ylabel="Mbit/s",
        )
    return 0


def cmd_convergence(args) -> int:
    ctx = _Context(args, "convergence")
    n = ctx.single_n(5)
    mode = ctx.knob("mode", "ergodic")
    runs = ctx.knob("runs", 100)
    sizes = ctx.knob("sizes", list(range(1000, 10_001, 1000)))
    q = ctx.knob("q", 0.9)
    study = engine.convergence_study(
        ctx.params, n, mode=mode, runs=runs, sizes=tuple(sizes), q=q, seed=ctx.seed
    )
    csvio.write_convergence_raw_csv(study, ctx.path("convergence_raw.csv"))
    csvio.write_convergence_summary_csv(study, ctx.path("convergence_summary.csv"))
    for cell in study.cells:
        print(f"  size {cell.size}: median {cell.median:.1f} us, IQR {cell.iqr:.1f} us")
    if ctx.chart:
        from . import charts

        charts.save_line_chart(
            [cell.size for cell in study.cells],
            {"IQR of quantile estimate": [cell.iqr for cell in study.cells]},
            ctx.path("convergence.svg"),
            xlabel=f"evaluation size ({mode})",
            ylabel="IQR (us)",
        )
    return 0


def cmd_oracle_check(args) -> int:
    ctx = _Context(args, "oracle-check")
    reps = ctx.knob("reps", 100_000)
    reduced = apply_overrides(ctx.params, {"cw_min_exponent": 2, "max_retries": 2})
    threshold = max(0.01, 1.63 / math.sqrt(reps))
    rows = []
    ok_all = True
    for n in (1, 2):
        exact = unroll_transient(reduced, n)
        mc = engine.run_transient(
            reduced, n, reps, seed=(ctx.seed, n), workers=ctx.workers
        )
        ks = ks_distance(exact.tte, mc.deltaq)
        ok = ks <= threshold
        ok_all &= ok
        rows.append((f"transient-tte-n{n}", reps, ks, threshold, ok))
        write_cdf_csv(exact.tte, ctx.path(f"oracle_tte_exact_n{n}.csv"))
        write_cdf_csv(mc.deltaq, ctx.path(f"oracle_tte_mc_n{n}.csv"))
        print(f"  n={n}: KS distance {ks:.5f} (threshold {threshold:.5f}) "
              f"{'ok' if ok else 'FAIL'}")
    csvio.write_oracle_report_csv(rows, ctx.path("oracle_check.csv"))
    return 0 if ok_all else 3


# -- parser wiring ---------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--preset", help="named parameter set (default bianchi-802.11b)")
    sub.add_argument("--config", help="flat key = value configuration file")
    sub.add_argument("--seed", type=int, help="master seed; omit for a random one")
    sub.add_argument("--out", help="output directory (default current directory)")
    sub.add_argument("--chart", action="store_true", default=None, help="also emit SVG charts")
    sub.add_argument("--workers", type=int, help="parallel worker processes")
    sub.add_argument("--stations", type=_parse_stations, metavar="N|A,B|A..B",
                     help="station count, list or range")
    sub.add_argument("--rts-cts", action="store_true", default=None,
                     help="enable the RTS/CTS handshake")
    sub.add_argument("--packet-size", type=int, help="payload size in bytes")
    sub.add_argument("--rate", type=float, help="data rate in Mbit/s")


def _build_parser() -> _Parser:
    parser = _Parser(prog="dcfsim", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("ergodic", help="saturated per-packet latency run")
    _add_common(sub)
    sub.add_argument("--outcomes", type=int, help="packet outcomes to observe")
    sub.add_argument("--windows", type=_parse_int_list, metavar="W,W,...",
                     help="sweep these initial back-off windows")
    sub.set_defaults(func=cmd_ergodic)

    sub = commands.add_parser("transient", help="single-packet time-to-empty runs")
    _add_common(sub)
    sub.add_argument("--reps", type=int, help="replications")
    sub.set_defaults(func=cmd_transient)

    sub = commands.add_parser("bound", help="bounded-latency throughput ceiling per station count")
    _add_common(sub)
    sub.add_argument("--reps", type=int, help="replications")
    sub.set_defaults(func=cmd_bound)

    sub = commands.add_parser("rts-heatmap", help="RTS/CTS benefit over stations x packet size")
    _add_common(sub)
    sub.add_argument("--reps", type=int, help="replications per cell")
    sub.add_argument("--sizes", type=_parse_sizes, metavar="A:B:STEP",
                     help="packet sizes, range or comma list")
    sub.set_defaults(func=cmd_rts_heatmap)

    sub = commands.add_parser("tte-compare", help="TTE distribution for protocol variants")
    _add_common(sub)
    sub.add_argument("--reps", type=int, help="replications")
    sub.set_defaults(func=cmd_tte_compare)

    sub = commands.add_parser("anomaly", help="one slow station dragging everyone down")
    _add_common(sub)
    sub.add_argument("--reps", type=int, help="replications")
    sub.add_argument("--slow-rate", type=float, help="pinned slow station rate")
    sub.add_argument("--fast-rates", type=_parse_float_list, metavar="R,R,...",
                     help="rates for the remaining stations")
    sub.set_defaults(func=cmd_anomaly)

    sub = commands.add_parser("convergence", help="estimator spread versus evaluation size")
    _add_common(sub)
    sub.add_argument("--mode", choices=("ergodic", "transient"))
    sub.add_argument("--runs", type=int, help="independent evaluations per size")
    sub.add_argument("--sizes", type=_parse_sizes, metavar="A:B:STEP")
    sub.add_argument("--q", type=float, help="quantile to track")
    sub.set_defaults(func=cmd_convergence)

    sub = commands.add_parser("oracle-check", help="sampling engine versus exact unrolling")
    _add_common(sub)
    sub.add_argument("--reps", type=int, help="replications for the sampled side")
    sub.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
