"""Monte Carlo evaluation of the contention model.

Two modes:

* ergodic: saturated stations restart immediately after every delivered or
  dropped packet; one long run yields per-packet head-of-line latency
  samples.
* transient: each station holds a single packet; a replication ends when
  the last station leaves, yielding one time-to-empty sample.

Reproducibility contract: a master seed expands into one independent
stream per replication index (numpy SeedSequence entropy = master tuple +
index), so results are bitwise independent of chunking and worker count.
The inner loop jumps over runs of decrement transitions in one go; those
consume no randomness, so the trace is identical to stepping slot by slot.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import model
from .deltaq import DeltaQ, from_samples
from .params import WifiParams

__all__ = [
    "ErgodicResult",
    "TransientResult",
    "ConvergenceCell",
    "ConvergenceStudy",
    "run_ergodic",
    "run_transient",
    "convergence_study",
    "seed_entropy",
]

_CHUNK = 4096


def seed_entropy(seed) -> tuple[int, ...]:
    """Normalize a master seed (int or tuple of ints) for SeedSequence use."""
    if isinstance(seed, (int, np.integer)):
        entropy = (int(seed),)
    else:
        entropy = tuple(int(part) for part in seed)
    if not entropy or any(part < 0 for part in entropy):
        raise ValueError(f"seed must be a non-negative int or tuple, got {seed!r}")
    return entropy


def _stream(entropy: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _resolve_stations(
    params: WifiParams,
    n_stations: int | None,
    stations: list[tuple[float, int]] | None,
) -> tuple[tuple[float, int], ...]:
    if stations is not None:
        if n_stations is not None and n_stations != len(stations):
            raise ValueError("n_stations disagrees with the station list")
        return tuple((float(r), int(s)) for r, s in stations)
    if n_stations is None or n_stations < 1:
        raise ValueError("need n_stations >= 1 or an explicit station list")
    return ((params.default_data_rate, params.default_packet_size),) * n_stations


@dataclass(frozen=True)
class _Precomp:
    """Per-run constants so the hot loop touches no dataclass fields."""

    n: int
    slot: float
    difs: float
    max_retries: int
    windows: tuple[int, ...]
    t_succ: tuple[float, ...]
    t_coll: tuple[float, ...]


def _precompute(params: WifiParams, specs) -> _Precomp:
    return _Precomp(
        n=len(specs),
        slot=params.slot_time,
        difs=params.difs,
        max_retries=params.max_retries,
        windows=tuple(params.window(r) for r in range(params.max_retries + 1)),
        t_succ=tuple(model.success_airtime(params, r, s) for r, s in specs),
        t_coll=tuple(model.collision_airtime(params, r, s) for r, s in specs),
    )


def _simulate_transient(pre: _Precomp, rng: np.random.Generator) -> float:
    """One replication; returns the time-to-empty in microseconds."""
    n = pre.n
    w0 = pre.windows[0]
    backoff = [int(rng.integers(0, w0)) for _ in range(n)]
    retry = [0] * n
    active = [True] * n
    remaining = n
    elapsed = 0.0
    while remaining:
        m = min(backoff[i] for i in range(n) if active[i])
        if m:
            elapsed += m * pre.slot
            for i in range(n):
                if active[i]:
                    backoff[i] -= m
        zeros = [i for i in range(n) if active[i] and backoff[i] == 0]
        if len(zeros) == 1:
            i = zeros[0]
            elapsed += pre.t_succ[i]
            active[i] = False
            remaining -= 1
        else:
            elapsed += max(pre.t_coll[i] for i in zeros)
            for i in zeros:
                if retry[i] == pre.max_retries:
                    active[i] = False
                    remaining -= 1
                else:
                    retry[i] += 1
                    backoff[i] = int(rng.integers(0, pre.windows[retry[i]]))
    return elapsed + pre.difs


def _simulate_ergodic(pre: _Precomp, rng: np.random.Generator, packet_outcomes: int):
    """One saturated run until at least ``packet_outcomes`` packets resolve."""
    n = pre.n
    w0 = pre.windows[0]
    backoff = [int(rng.integers(0, w0)) for _ in range(n)]
    retry = [0] * n
    started = [0.0] * n
    elapsed = 0.0
    sids: list[int] = []
    lats: list[float] = []
    while len(sids) < packet_outcomes:
        m = min(backoff)
        if m:
            elapsed += m * pre.slot
            for i in range(n):
                backoff[i] -= m
        zeros = [i for i in range(n) if backoff[i] == 0]
        if len(zeros) == 1:
            i = zeros[0]
            elapsed += pre.t_succ[i]
            sids.append(i)
            lats.append(elapsed - started[i] + pre.difs)
            retry[i] = 0
            backoff[i] = int(rng.integers(0, w0))
            started[i] = elapsed
        else:
            elapsed += max(pre.t_coll[i] for i in zeros)
            for i in zeros:
                if retry[i] == pre.max_retries:
                    sids.append(i)
                    lats.append(np.nan)
                    retry[i] = 0
                    backoff[i] = int(rng.integers(0, w0))
                    started[i] = elapsed
                else:
                    retry[i] += 1
                    backoff[i] = int(rng.integers(0, pre.windows[retry[i]]))
    return np.asarray(sids, dtype=np.int64), np.asarray(lats), elapsed


@dataclass(frozen=True)
class ErgodicResult:
    """Chronological per-packet outcomes of one saturated run.

    ``latencies`` holds NaN where the packet was dropped; pair it with
    ``station_ids`` to slice per station.
    """

    station_ids: np.ndarray
    latencies: np.ndarray
    elapsed_us: float
    n_stations: int
    data_rates: tuple[float, ...]
    packet_sizes: tuple[int, ...]

    @property
    def packets_observed(self) -> int:
        return int(self.station_ids.size)

    @property
    def delivered_latencies(self) -> np.ndarray:
        return self.latencies[~np.isnan(self.latencies)]

    @property
    def loss_count(self) -> int:
        return int(np.isnan(self.latencies).sum())

    @property
    def loss_fraction(self) -> float:
        return self.loss_count / self.packets_observed

    @property
    def per_packet_latency(self) -> DeltaQ:
        return from_samples(self.delivered_latencies, self.loss_count)

    def station_latency(self, station: int) -> DeltaQ:
        mask = self.station_ids == station
        lat = self.latencies[mask]
        return from_samples(lat[~np.isnan(lat)], int(np.isnan(lat).sum()))

    def station_loss_counts(self) -> np.ndarray:
        counts = np.zeros(self.n_stations, dtype=int)
        for sid in self.station_ids[np.isnan(self.latencies)]:
            counts[sid] += 1
        return counts


@dataclass(frozen=True)
class TransientResult:
    """Time-to-empty samples across replications, microseconds."""

    time_to_empty_us: np.ndarray
    replications: int

    @property
    def deltaq(self) -> DeltaQ:
        return from_samples(self.time_to_empty_us)

    @property
    def mean_tte_us(self) -> float:
        return float(self.time_to_empty_us.mean())


def run_ergodic(
    params: WifiParams,
    n_stations: int | None = None,
    packet_outcomes: int = 10_000,
    seed=0,
    stations: list[tuple[float, int]] | None = None,
) -> ErgodicResult:
    """Saturated run observing ``packet_outcomes`` delivered-or-lost packets.

    All stations start a fresh back-off at time zero; no warm-up is
    discarded.  A final collision may resolve several packets at once, so
    the result can hold slightly more outcomes than asked.
    """
    if packet_outcomes < 1:
        raise ValueError("packet_outcomes must be positive")
    specs = _resolve_stations(params, n_stations, stations)
    pre = _precompute(params, specs)
    rng = _stream(seed_entropy(seed))
    sids, lats, elapsed = _simulate_ergodic(pre, rng, packet_outcomes)
    return ErgodicResult(
        station_ids=sids,
        latencies=lats,
        elapsed_us=elapsed,
        n_stations=pre.n,
        data_rates=tuple(r for r, _ in specs),
        packet_sizes=tuple(s for _, s in specs),
    )


def _transient_chunk(task) -> np.ndarray:
    params, specs, lo, hi, entropy = task
    pre = _precompute(params, specs)
    out = np.empty(hi - lo)
    for rep in range(lo, hi):
        out[rep - lo] = _simulate_transient(pre, _stream(entropy + (rep,)))
    return out


def run_transient(
    params: WifiParams,
    n_stations: int | None = None,
    replications: int = 10_000,
    seed=0,
    start: str = "synchronized",
    stations: list[tuple[float, int]] | None = None,
    workers: int = 1,
) -> TransientResult:
    """Independent single-packet replications, one TTE sample each.

    ``start`` accepts "synchronized" or "random"; both place every station
    at retry zero with a uniform window(0) draw, which is the same
    distribution, so the names are interchangeable.  Replication ``i``
    always uses stream (seed..., i) no matter how work is chunked.
    """
    if replications < 1:
        raise ValueError("replications must be positive")
    if start not in ("synchronized", "random"):
        raise ValueError(f"start must be 'synchronized' or 'random', got {start!r}")
    specs = _resolve_stations(params, n_stations, stations)
    entropy = seed_entropy(seed)
    tasks = [
        (params, specs, lo, min(lo + _CHUNK, replications), entropy)
        for lo in range(0, replications, _CHUNK)
    ]
    if workers <= 1 or len(tasks) == 1:
        chunks = [_transient_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_transient_chunk, tasks))
    return TransientResult(np.concatenate(chunks), replications)


@dataclass(frozen=True)
class ConvergenceCell:
    size: int
    estimates: np.ndarray

    @property
    def median(self) -> float:
        return float(np.median(self.estimates))

    @property
    def iqr(self) -> float:
        # undefined quantile estimates are +inf; interpolating next to them
        # is fine (the spread is infinite) but numpy warns, so hush it
        with np.errstate(invalid="ignore"):
            lo, hi = np.percentile(self.estimates, [25.0, 75.0])
        return float(hi - lo)


@dataclass(frozen=True)
class ConvergenceStudy:
    mode: str
    n_stations: int
    q: float
    runs: int
    cells: tuple[ConvergenceCell, ...]


def convergence_study(
    params: WifiParams,
    n_stations: int,
    mode: str = "ergodic",
    runs: int = 1000,
    sizes: tuple[int, ...] = tuple(range(1000, 10_001, 1000)),
    q: float = 0.9,
    seed=0,
) -> ConvergenceStudy:
    """Spread of a quantile estimate versus evaluation size.

    For each size, ``runs`` independent evaluations each produce one
    q-quantile estimate (of per-packet latency in ergodic mode, of TTE in
    transient mode).  Estimates whose quantile is undefined, because loss
    exceeds 1 - q, come back as +inf.  Run ``r`` at size index ``s`` uses
    stream (seed..., s, r).
    """
    if mode not in ("ergodic", "transient"):
        raise ValueError(f"mode must be 'ergodic' or 'transient', got {mode!r}")
    entropy = seed_entropy(seed)
    cells = []
    for si, size in enumerate(sizes):
        estimates = np.empty(runs)
        for r in range(runs):
            cell_seed = entropy + (si, r)
            if mode == "ergodic":
                dist = run_ergodic(params, n_stations, size, seed=cell_seed).per_packet_latency
            else:
                dist = run_transient(params, n_stations, size, seed=cell_seed).deltaq
            estimates[r] = dist.quantile(q).value
        cells.append(ConvergenceCell(int(size), estimates))
    return ConvergenceStudy(mode, n_stations, q, runs, tuple(cells))
