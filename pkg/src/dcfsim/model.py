"""Slotted DCF contention as a labeled transition system.

The whole protocol reduces to one three-way rule evaluated on the active
stations' back-off counters:

* nobody at zero: every counter decrements, one slot time passes;
* exactly one at zero: that station transmits successfully;
* several at zero: they collide, losing the packets whose retry budget is
  spent and re-drawing the rest at the next window.

Stations that are not involved in a transmission hold their counters for
its duration.  Durations fold the trailing inter-frame gaps into the
transmission itself, so the shared clock advances only through slots and
transmissions; the single DIFS a station waits before a fresh back-off is
accounted per packet, not on the shared clock.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .params import WifiParams

__all__ = [
    "TransitionKind",
    "Station",
    "SystemState",
    "Transition",
    "PacketEvent",
    "DELIVERED",
    "LOST",
    "draw_backoff",
    "frame_airtime",
    "ack_airtime",
    "rts_airtime",
    "cts_airtime",
    "success_airtime",
    "collision_airtime",
    "t_frame",
    "t_success",
    "t_collision",
    "classify",
    "step",
    "initial_state",
]

DELIVERED = "delivered"
LOST = "lost"


class TransitionKind(enum.Enum):
    DECREMENT = "decrement"
    SUCCESS = "success"
    COLLISION = "collision"


@dataclass(frozen=True)
class Station:
    """One contender. ``started_us`` is when its current packet's back-off
    procedure began, used to measure head-of-line latency."""

    id: int
    data_rate: float
    packet_size: int
    retry: int = 0
    backoff: int = 0
    active: bool = True
    started_us: float = 0.0

    def __post_init__(self):
        if self.data_rate <= 0.0:
            raise ValueError("data_rate must be positive")
        if self.packet_size <= 0:
            raise ValueError("packet_size must be positive")
        if self.retry < 0 or self.backoff < 0:
            raise ValueError("retry and backoff must be non-negative")


@dataclass(frozen=True)
class SystemState:
    """A value: the tuple of stations plus elapsed shared-medium time."""

    stations: tuple[Station, ...]
    elapsed_us: float = 0.0

    def active_ids(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.stations) if s.active)

    def occupancy(self, params: WifiParams) -> np.ndarray:
        """Counts of active stations per (retry, backoff) cell."""
        grid = np.zeros((params.max_retries + 1, params.cw_max + 1), dtype=int)
        for s in self.stations:
            if s.active:
                grid[s.retry, s.backoff] += 1
        return grid


@dataclass(frozen=True)
class Transition:
    kind: TransitionKind
    stations: tuple[int, ...]
    duration_us: float

    def __post_init__(self):
        if self.kind is TransitionKind.SUCCESS and len(self.stations) != 1:
            raise ValueError("a success names exactly one station")
        if self.kind is TransitionKind.COLLISION and len(self.stations) < 2:
            raise ValueError("a collision involves at least two stations")
        if self.kind is TransitionKind.DECREMENT and self.stations:
            raise ValueError("a decrement names no stations")
        if self.duration_us <= 0.0:
            raise ValueError("transitions take positive time")


@dataclass(frozen=True)
class PacketEvent:
    """Outcome of one head-of-line packet: delivered with a latency, or lost."""

    station: int
    outcome: str
    latency_us: float | None

    def __post_init__(self):
        if self.outcome not in (DELIVERED, LOST):
            raise ValueError(f"outcome must be {DELIVERED!r} or {LOST!r}")
        if (self.outcome == DELIVERED) != (self.latency_us is not None):
            raise ValueError("delivered events carry a latency, lost events do not")


def draw_backoff(params: WifiParams, retry: int, rng: np.random.Generator) -> int:
    """Uniform draw from {0, ..., window(retry) - 1}."""
    return int(rng.integers(0, params.window(retry)))


# -- airtime assembly ------------------------------------------------------


def frame_airtime(params: WifiParams, data_rate: float, packet_bytes: int) -> float:
    """Header plus payload time for one data frame, microseconds."""
    return params.phy_header + (params.mac_header_bits + 8 * packet_bytes) / data_rate


def ack_airtime(params: WifiParams, data_rate: float) -> float:
    return params.phy_header + 8 * params.ack_bytes / params.control_rate(data_rate)


def rts_airtime(params: WifiParams, data_rate: float) -> float:
    return params.phy_header + 8 * params.rts_bytes / params.control_rate(data_rate)


def cts_airtime(params: WifiParams, data_rate: float) -> float:
    return params.phy_header + 8 * params.cts_bytes / params.control_rate(data_rate)


def success_airtime(params: WifiParams, data_rate: float, packet_bytes: int) -> float:
    """Full cost of a successful exchange including trailing DIFS.

    With RTS/CTS the handshake (RTS, SIFS, CTS, SIFS) precedes the frame.
    """
    base = (
        frame_airtime(params, data_rate, packet_bytes)
        + params.sifs
        + ack_airtime(params, data_rate)
        + params.difs
    )
    if params.rts_cts_enabled:
        base += rts_airtime(params, data_rate) + params.sifs + cts_airtime(params, data_rate) + params.sifs
    return base


def collision_airtime(params: WifiParams, data_rate: float, packet_bytes: int) -> float:
    """One collider's contribution to a collision's duration.

    Without RTS/CTS the medium is blocked for the frame plus the ACK
    timeout; with it only the short handshake (and CTS timeout) is lost,
    which is the whole point of the mechanism.
    """
    if params.rts_cts_enabled:
        return (
            rts_airtime(params, data_rate)
            + params.sifs
            + cts_airtime(params, data_rate)
            + params.difs
        )
    return (
        frame_airtime(params, data_rate, packet_bytes)
        + params.sifs
        + ack_airtime(params, data_rate)
        + params.difs
    )


def t_frame(params: WifiParams, station: Station) -> float:
    return frame_airtime(params, station.data_rate, station.packet_size)


def t_success(params: WifiParams, station: Station) -> float:
    return success_airtime(params, station.data_rate, station.packet_size)


def t_collision(params: WifiParams, colliders) -> float:
    """A collision lasts as long as its slowest participant blocks the medium."""
    colliders = list(colliders)
    if len(colliders) < 2:
        raise ValueError("a collision involves at least two stations")
    return max(collision_airtime(params, s.data_rate, s.packet_size) for s in colliders)


# -- transition rule -------------------------------------------------------


def classify(state: SystemState) -> tuple[TransitionKind, tuple[int, ...]]:
    """Decide the next transition from the zero-counter set."""
    active = state.active_ids()
    if not active:
        raise ValueError("no active stations: nothing to classify")
    zeros = tuple(i for i in active if state.stations[i].backoff == 0)
    if not zeros:
        return TransitionKind.DECREMENT, ()
    if len(zeros) == 1:
        return TransitionKind.SUCCESS, zeros
    return TransitionKind.COLLISION, zeros


def step(
    state: SystemState,
    params: WifiParams,
    rng: np.random.Generator,
    mode: str = "ergodic",
) -> tuple[SystemState, Transition, list[PacketEvent]]:
    """Apply one transition.

    ``mode`` controls what happens to a station whose packet finishes:
    ``"ergodic"`` restarts it immediately with a fresh packet (saturation),
    ``"transient"`` deactivates it.  Latencies include the packet's initial
    DIFS wait on top of the shared-clock interval.
    """
    if mode not in ("ergodic", "transient"):
        raise ValueError(f"mode must be 'ergodic' or 'transient', got {mode!r}")
    kind, ids = classify(state)
    stations = list(state.stations)
    events: list[PacketEvent] = []

    if kind is TransitionKind.DECREMENT:
        duration = params.slot_time
        for i, s in enumerate(stations):
            if s.active:
                stations[i] = replace(s, backoff=s.backoff - 1)
        elapsed = state.elapsed_us + duration
    elif kind is TransitionKind.SUCCESS:
        winner = ids[0]
        duration = t_success(params, stations[winner])
        elapsed = state.elapsed_us + duration
        latency = elapsed - stations[winner].started_us + params.difs
        events.append(PacketEvent(winner, DELIVERED, latency))
        if mode == "ergodic":
            stations[winner] = replace(
                stations[winner],
                retry=0,
                backoff=draw_backoff(params, 0, rng),
                started_us=elapsed,
            )
        else:
            stations[winner] = replace(stations[winner], active=False)
    else:
        duration = t_collision(params, [stations[i] for i in ids])
        elapsed = state.elapsed_us + duration
        for i in ids:
            s = stations[i]
            if s.retry == params.max_retries:
                events.append(PacketEvent(i, LOST, None))
                if mode == "ergodic":
                    stations[i] = replace(
                        s, retry=0, backoff=draw_backoff(params, 0, rng), started_us=elapsed
                    )
                else:
                    stations[i] = replace(s, active=False)
            else:
                stations[i] = replace(
                    s, retry=s.retry + 1, backoff=draw_backoff(params, s.retry + 1, rng)
                )

    new_state = SystemState(tuple(stations), elapsed)
    return new_state, Transition(kind, ids, duration), events


def initial_state(
    params: WifiParams,
    rng: np.random.Generator,
    n_stations: int | None = None,
    stations: list[tuple[float, int]] | None = None,
) -> SystemState:
    """All stations at retry zero with fresh uniform back-off draws.

    ``stations`` optionally gives per-station (data_rate, packet_size)
    pairs; otherwise ``n_stations`` homogeneous stations use the defaults.
    Draws happen in station id order.
    """
    if stations is None:
        if n_stations is None or n_stations < 1:
            raise ValueError("need n_stations >= 1 or an explicit station list")
        stations = [(params.default_data_rate, params.default_packet_size)] * n_stations
    elif n_stations is not None and n_stations != len(stations):
        raise ValueError("n_stations disagrees with the station list")
    built = tuple(
        Station(
            id=i,
            data_rate=rate,
            packet_size=size,
            retry=0,
            backoff=draw_backoff(params, 0, rng),
        )
        for i, (rate, size) in enumerate(stations)
    )
    return SystemState(built, 0.0)
