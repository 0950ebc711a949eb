"""Writers and matching readers for every CSV the tool emits.

CSV is the output contract: plain headers, one record per row, floats
written with Python's shortest round-trip repr so that re-parsing gives
back the exact values.  Each writer here has a reader that accepts its
output.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .analysis import AnomalyResult, HeatmapResult, ThroughputBound, WindowSweepRow
from .engine import ConvergenceStudy, ErgodicResult, TransientResult

__all__ = [
    "write_ergodic_dump",
    "read_ergodic_dump",
    "write_ergodic_summary_csv",
    "read_ergodic_summary_csv",
    "write_transient_dump",
    "read_transient_dump",
    "write_bounds_csv",
    "read_bounds_csv",
    "write_heatmap_csv",
    "read_heatmap_csv",
    "write_anomaly_csv",
    "read_anomaly_csv",
    "write_window_sweep_csv",
    "read_window_sweep_csv",
    "write_transient_summary_csv",
    "read_transient_summary_csv",
    "write_convergence_raw_csv",
    "read_convergence_raw_csv",
    "write_convergence_summary_csv",
    "read_convergence_summary_csv",
    "write_oracle_report_csv",
    "read_oracle_report_csv",
]


def _open_out(path):
    return open(path, "w", newline="")


def _rows(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            raise ValueError(f"{path}: expected header {expected_header}, got {header}")
        yield from reader


def write_ergodic_dump(result: ErgodicResult, path: str | Path, replication: int = 0) -> None:
    """Per-packet outcomes: ``replication,station,outcome,latency_us``.

    Lost packets leave the latency field empty; the outcome column carries
    the information.
    """
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["replication", "station", "outcome", "latency_us"])
        for sid, lat in zip(result.station_ids, result.latencies):
            if math.isnan(lat):
                writer.writerow([replication, int(sid), "lost", ""])
            else:
                writer.writerow([replication, int(sid), "delivered", float(lat)])


def read_ergodic_dump(path: str | Path):
    """Returns (replications, station ids, latencies with NaN for losses)."""
    reps, sids, lats = [], [], []
    for row in _rows(path, ["replication", "station", "outcome", "latency_us"]):
        reps.append(int(row[0]))
        sids.append(int(row[1]))
        if row[2] == "lost":
            lats.append(math.nan)
        elif row[2] == "delivered":
            lats.append(float(row[3]))
        else:
            raise ValueError(f"{path}: unknown outcome {row[2]!r}")
    return np.asarray(reps), np.asarray(sids), np.asarray(lats)


def write_transient_dump(result: TransientResult, path: str | Path) -> None:
    """Raw samples: ``replication,tte_us``."""
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["replication", "tte_us"])
        for i, tte in enumerate(result.time_to_empty_us):
            writer.writerow([i, float(tte)])


def read_transient_dump(path: str | Path) -> np.ndarray:
    return np.asarray(
        [float(row[1]) for row in _rows(path, ["replication", "tte_us"])]
    )


_BOUNDS_HEADER = ["n_stations", "packet_size_bytes", "mean_tte_us", "total_mbps", "per_station_mbps"]


def write_bounds_csv(rows: list[tuple[int, ThroughputBound]], path: str | Path) -> None:
    """``rows`` pairs each bound with the packet size it was computed at."""
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_BOUNDS_HEADER)
        for size, bound in rows:
            writer.writerow(
                [bound.n_stations, size, bound.mean_tte_us, bound.total_mbps, bound.per_station_mbps]
            )


def read_bounds_csv(path: str | Path) -> list[tuple[int, ThroughputBound]]:
    out = []
    for row in _rows(path, _BOUNDS_HEADER):
        out.append(
            (
                int(row[1]),
                ThroughputBound(
                    n_stations=int(row[0]),
                    mean_tte_us=float(row[2]),
                    total_mbps=float(row[3]),
                    per_station_mbps=float(row[4]),
                ),
            )
        )
    return out


_HEATMAP_HEADER = ["n_stations", "packet_size_bytes", "percent_change"]


def write_heatmap_csv(result: HeatmapResult, path: str | Path) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_HEATMAP_HEADER)
        for i, n in enumerate(result.station_counts):
            for j, size in enumerate(result.packet_sizes):
                writer.writerow([n, size, float(result.percent_change[i, j])])


def read_heatmap_csv(path: str | Path) -> list[tuple[int, int, float]]:
    return [
        (int(row[0]), int(row[1]), float(row[2])) for row in _rows(path, _HEATMAP_HEADER)
    ]


_ANOMALY_HEADER = ["fast_rate_mbps", "mean_tte_us", "station", "data_rate_mbps", "bound_mbps"]


def write_anomaly_csv(result: AnomalyResult, path: str | Path) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_ANOMALY_HEADER)
        for row in result.rows:
            for sid, bound in enumerate(row.per_station_mbps):
                rate = result.slow_rate if sid == 0 else row.fast_rate
                writer.writerow([row.fast_rate, row.mean_tte_us, sid, rate, bound])


def read_anomaly_csv(path: str | Path) -> list[tuple[float, float, int, float, float]]:
    return [
        (float(r[0]), float(r[1]), int(r[2]), float(r[3]), float(r[4]))
        for r in _rows(path, _ANOMALY_HEADER)
    ]


_SWEEP_HEADER = [
    "initial_window",
    "total_mbps",
    "loss_fraction",
    "mean_latency_us",
    "p90_latency_us",
]


def write_window_sweep_csv(rows, path: str | Path) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_SWEEP_HEADER)
        for r in rows:
            writer.writerow(
                [r.initial_window, r.total_mbps, r.loss_fraction, r.mean_latency_us, r.p90_latency_us]
            )


def read_window_sweep_csv(path: str | Path) -> list[WindowSweepRow]:
    return [
        WindowSweepRow(int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4]))
        for r in _rows(path, _SWEEP_HEADER)
    ]


_ERGODIC_SUMMARY_HEADER = [
    "n_stations",
    "packets_observed",
    "delivered",
    "lost",
    "loss_fraction",
    "mean_latency_us",
    "p90_latency_us",
    "total_mbps",
]


def write_ergodic_summary_csv(rows, path: str | Path) -> None:
    """``rows``: tuples matching the header, one per station count."""
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_ERGODIC_SUMMARY_HEADER)
        for row in rows:
            writer.writerow(list(row))


def read_ergodic_summary_csv(path: str | Path):
    return [
        (int(r[0]), int(r[1]), int(r[2]), int(r[3]), float(r[4]), float(r[5]), float(r[6]), float(r[7]))
        for r in _rows(path, _ERGODIC_SUMMARY_HEADER)
    ]


_TRANSIENT_SUMMARY_HEADER = ["n_stations", "replications", "mean_tte_us", "p90_tte_us"]


def write_transient_summary_csv(rows: list[tuple[int, TransientResult]], path: str | Path) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRANSIENT_SUMMARY_HEADER)
        for n, result in rows:
            p90 = result.deltaq.quantile(0.9).value
            writer.writerow([n, result.replications, result.mean_tte_us, p90])


def read_transient_summary_csv(path: str | Path) -> list[tuple[int, int, float, float]]:
    return [
        (int(r[0]), int(r[1]), float(r[2]), float(r[3]))
        for r in _rows(path, _TRANSIENT_SUMMARY_HEADER)
    ]


_CONV_RAW_HEADER = ["mode", "n_stations", "size", "run", "quantile_us"]


def write_convergence_raw_csv(study: ConvergenceStudy, path: str | Path) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_CONV_RAW_HEADER)
        for cell in study.cells:
            for run, value in enumerate(cell.estimates):
                writer.writerow([study.mode, study.n_stations, cell.size, run, float(value)])


def read_convergence_raw_csv(path: str | Path) -> list[tuple[str, int, int, int, float]]:
    return [
        (r[0], int(r[1]), int(r[2]), int(r[3]), float(r[4]))
        for r in _rows(path, _CONV_RAW_HEADER)
    ]


_CONV_SUMMARY_HEADER = ["mode", "n_stations", "size", "runs", "median_us", "iqr_us", "min_us", "max_us"]


def write_convergence_summary_csv(study: ConvergenceStudy, path: str | Path) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_CONV_SUMMARY_HEADER)
        for cell in study.cells:
            writer.writerow(
                [
                    study.mode,
                    study.n_stations,
                    cell.size,
                    study.runs,
                    cell.median,
                    cell.iqr,
                    float(cell.estimates.min()),
                    float(cell.estimates.max()),
                ]
            )


def read_convergence_summary_csv(path: str | Path):
    return [
        (r[0], int(r[1]), int(r[2]), int(r[3]), float(r[4]), float(r[5]), float(r[6]), float(r[7]))
        for r in _rows(path, _CONV_SUMMARY_HEADER)
    ]


_ORACLE_HEADER = ["instance", "replications", "ks_distance", "threshold", "status"]


def write_oracle_report_csv(rows, path: str | Path) -> None:
    """``rows``: (instance label, replications, ks, threshold, ok)."""
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_ORACLE_HEADER)
        for label, reps, ks, threshold, ok in rows:
            writer.writerow([label, reps, float(ks), float(threshold), "pass" if ok else "fail"])


def read_oracle_report_csv(path: str | Path):
    return [
        (r[0], int(r[1]), float(r[2]), float(r[3]), r[4]) for r in _rows(path, _ORACLE_HEADER)
    ]
