"""Throughput figures derived from latency and time-to-empty distributions.

The central identities: under saturation the throughput seen by a station
is the reciprocal of its mean delivered latency, and a system that must
drain n simultaneous packets within the observed mean time-to-empty cannot
carry a sustained load beyond n packets per mean TTE.  Everything else
here is experiment plumbing around those two lines.

Convenient unit fact: bits divided by microseconds is exactly Mbit/s.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .engine import TransientResult, run_ergodic, run_transient, seed_entropy
from .params import WifiParams

__all__ = [
    "Throughput",
    "ThroughputBound",
    "HeatmapResult",
    "AnomalyRow",
    "AnomalyResult",
    "WindowSweepRow",
    "throughput_from_latency",
    "bound_from_tte",
    "throughput_bound",
    "amsdu_bound",
    "rts_heatmap",
    "first_positive_size",
    "anomaly_experiment",
    "window_sweep",
    "tte_compare",
]


@dataclass(frozen=True)
class Throughput:
    packets_per_second: float
    mbps: float


def throughput_from_latency(latencies_us, packet_bits: int) -> Throughput:
    """Saturation throughput implied by delivered-latency samples."""
    lat = np.asarray(latencies_us, dtype=float)
    if lat.size == 0:
        raise ValueError("no delivered latencies to average")
    mean_us = float(lat.mean())
    return Throughput(packets_per_second=1e6 / mean_us, mbps=packet_bits / mean_us)


@dataclass(frozen=True)
class ThroughputBound:
    """Bounded-latency capacity: n packets per mean time-to-empty."""

    n_stations: int
    mean_tte_us: float
    total_mbps: float
    per_station_mbps: float

    def __post_init__(self):
        if self.n_stations < 1 or self.mean_tte_us <= 0.0:
            raise ValueError("bound needs n_stations >= 1 and a positive mean TTE")
        if not math.isclose(self.total_mbps, self.n_stations * self.per_station_mbps, rel_tol=1e-9):
            raise ValueError("total and per-station rates disagree")


def bound_from_tte(
    tte: TransientResult,
    params: WifiParams,
    n_stations: int,
    packet_size: int | None = None,
) -> ThroughputBound:
    size = params.default_packet_size if packet_size is None else packet_size
    mean = tte.mean_tte_us
    per_station = 8 * size / mean
    return ThroughputBound(
        n_stations=n_stations,
        mean_tte_us=mean,
        total_mbps=n_stations * per_station,
        per_station_mbps=per_station,
    )


def throughput_bound(
    params: WifiParams,
    n_stations: int,
    replications: int = 10_000,
    seed=0,
    packet_size: int | None = None,
    workers: int = 1,
) -> ThroughputBound:
    """Run the transient experiment for one station count and bound it.

    The run is seeded with (seed..., n_stations) so sweeps over n stay
    independent while identical calls stay reproducible.
    """
    size = params.default_packet_size if packet_size is None else int(packet_size)
    stations = [(params.default_data_rate, size)] * n_stations
    tte = run_transient(
        params,
        replications=replications,
        seed=seed_entropy(seed) + (n_stations,),
        stations=stations,
        workers=workers,
    )
    return bound_from_tte(tte, params, n_stations, packet_size=size)


def amsdu_bound(
    params: WifiParams,
    n_stations: int,
    aggregate_size: int,
    replications: int = 10_000,
    seed=0,
    workers: int = 1,
) -> ThroughputBound:
    """Bound with frames aggregated up to ``aggregate_size`` bytes.

    Rejected when the parameter set declares an aggregation limit and the
    requested size exceeds it.  With the default packet size this is
    byte-for-byte the plain bound.
    """
    if params.amsdu_limit_bytes is not None and aggregate_size > params.amsdu_limit_bytes:
        raise ValueError(
            f"aggregate size {aggregate_size} exceeds the {params.amsdu_limit_bytes}-byte limit"
        )
    if aggregate_size <= 0:
        raise ValueError("aggregate size must be positive")
    return throughput_bound(
        params, n_stations, replications, seed, packet_size=aggregate_size, workers=workers
    )


@dataclass(frozen=True)
class HeatmapResult:
    """Percent change in the throughput bound from enabling RTS/CTS."""

    station_counts: tuple[int, ...]
    packet_sizes: tuple[int, ...]
    base_mbps: np.ndarray
    rts_mbps: np.ndarray
    percent_change: np.ndarray


def rts_heatmap(
    params: WifiParams,
    station_counts,
    packet_sizes,
    replications: int = 10_000,
    seed=0,
    workers: int = 1,
) -> HeatmapResult:
    """Sweep (station count, packet size); each cell runs the transient
    experiment with and without the handshake.

    Cell seeds derive from (seed..., n, size, variant), so the grid shape
    and evaluation order are irrelevant to the numbers.
    """
    counts = tuple(int(n) for n in station_counts)
    sizes = tuple(int(s) for s in packet_sizes)
    entropy = seed_entropy(seed)
    base = np.empty((len(counts), len(sizes)))
    rts = np.empty((len(counts), len(sizes)))
    variants = (
        dataclasses.replace(params, rts_cts_enabled=False),
        dataclasses.replace(params, rts_cts_enabled=True),
    )
    for i, n in enumerate(counts):
        for j, size in enumerate(sizes):
            for flag, (variant, out) in enumerate(zip(variants, (base, rts))):
                tte = run_transient(
                    variant,
                    replications=replications,
                    seed=entropy + (n, size, flag),
                    stations=[(variant.default_data_rate, size)] * n,
                    workers=workers,
                )
                out[i, j] = bound_from_tte(tte, variant, n, packet_size=size).total_mbps
    percent = 100.0 * (rts - base) / base
    return HeatmapResult(counts, sizes, base, rts, percent)


def first_positive_size(result: HeatmapResult, n_stations: int) -> int | None:
    """Smallest packet size at which the handshake starts paying off."""
    row = result.percent_change[result.station_counts.index(n_stations)]
    for size, value in zip(result.packet_sizes, row):
        if value > 0.0:
            return size
    return None


@dataclass(frozen=True)
class AnomalyRow:
    fast_rate: float
    mean_tte_us: float
    per_station_mbps: tuple[float, ...]


@dataclass(frozen=True)
class AnomalyResult:
    slow_rate: float
    n_stations: int
    rows: tuple[AnomalyRow, ...]


def anomaly_experiment(
    params: WifiParams,
    n_stations: int,
    slow_rate: float = 1.0,
    fast_rates=(2.0, 5.5, 11.0, 24.0, 54.0, 144.0),
    replications: int = 10_000,
    seed=0,
    workers: int = 1,
) -> AnomalyResult:
    """One station pinned slow while the rest speed up.

    Equal transmit opportunities mean every station drains one equal-sized
    packet per time-to-empty window, so each station's bound is its packet
    bits over the mean TTE; the slow transmitter drags all of them down.
    """
    if n_stations < 2:
        raise ValueError("the anomaly needs at least one fast station")
    entropy = seed_entropy(seed)
    size = params.default_packet_size
    rows = []
    for k, fast in enumerate(fast_rates):
        stations = [(float(slow_rate), size)] + [(float(fast), size)] * (n_stations - 1)
        tte = run_transient(
            params,
            replications=replications,
            seed=entropy + (k,),
            stations=stations,
            workers=workers,
        )
        bounds = tuple(8 * size / tte.mean_tte_us for _ in range(n_stations))
        rows.append(AnomalyRow(float(fast), tte.mean_tte_us, bounds))
    return AnomalyResult(float(slow_rate), n_stations, tuple(rows))


@dataclass(frozen=True)
class WindowSweepRow:
    initial_window: int
    total_mbps: float
    loss_fraction: float
    mean_latency_us: float
    p90_latency_us: float


def window_sweep(
    params: WifiParams,
    n_stations: int,
    window_sizes=(8, 16, 32, 64, 128, 256, 512, 1024),
    packet_outcomes: int = 10_000,
    seed=0,
) -> tuple[WindowSweepRow, ...]:
    """Saturation throughput as the initial back-off window varies.

    Window sizes must be powers of two; each becomes the window-doubling
    exponent with the retry schedule and cap unchanged.  Total throughput
    is delivered payload over elapsed medium time, which agrees with the
    per-station latency reciprocal scaled by n whenever loss is
    negligible but stays honest when dropped packets burn a visible share
    of the medium.
    """
    entropy = seed_entropy(seed)
    bits = 8 * params.default_packet_size
    rows = []
    for wi, w in enumerate(window_sizes):
        exponent = int(w).bit_length() - 1
        if 2**exponent != int(w):
            raise ValueError(f"window size {w} is not a power of two")
        swept = dataclasses.replace(params, cw_min_exponent=exponent)
        res = run_ergodic(swept, n_stations, packet_outcomes, seed=entropy + (wi,))
        delivered = res.packets_observed - res.loss_count
        rows.append(
            WindowSweepRow(
                initial_window=int(w),
                total_mbps=delivered * bits / res.elapsed_us,
                loss_fraction=res.loss_fraction,
                mean_latency_us=float(res.delivered_latencies.mean()),
                p90_latency_us=res.per_packet_latency.quantile(0.9).value,
            )
        )
    return tuple(rows)


def tte_compare(
    params: WifiParams,
    n_stations: int,
    replications: int = 10_000,
    seed=0,
    amsdu_size: int | None = None,
    workers: int = 1,
) -> dict[str, TransientResult]:
    """TTE distributions for baseline, RTS/CTS and aggregation variants.

    All variants share the replication streams: protocol features change
    durations, never the contention dynamics, so common random numbers
    make the comparison sharp.
    """
    if amsdu_size is None:
        amsdu_size = params.amsdu_limit_bytes or params.default_packet_size
    if params.amsdu_limit_bytes is not None and amsdu_size > params.amsdu_limit_bytes:
        raise ValueError(
            f"aggregate size {amsdu_size} exceeds the {params.amsdu_limit_bytes}-byte limit"
        )
    entropy = seed_entropy(seed)
    out: dict[str, TransientResult] = {}
    out["baseline"] = run_transient(
        params, n_stations, replications, seed=entropy, workers=workers
    )
    out["rts-cts"] = run_transient(
        dataclasses.replace(params, rts_cts_enabled=True),
        n_stations,
        replications,
        seed=entropy,
        workers=workers,
    )
    out["amsdu"] = run_transient(
        params,
        replications=replications,
        seed=entropy,
        stations=[(params.default_data_rate, int(amsdu_size))] * n_stations,
        workers=workers,
    )
    return out
