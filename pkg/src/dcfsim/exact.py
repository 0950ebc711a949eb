"""Brute-force enumeration of the contention tree with exact probabilities.

Expands the transition system as a pure tree (no state merging): decrement
edges are deterministic, success and collision edges branch over every
equally likely back-off redraw, with probabilities tracked as Fractions.
The result is the exact time-to-empty distribution plus each station's
completion-time distribution, against which the sampling engine can be
cross-checked.

State spaces blow up combinatorially, hence the node budget: expansion
aborts with the offending count rather than grinding forever.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import model
from .deltaq import DeltaQ
from .params import WifiParams

__all__ = ["BudgetExceededError", "ExactResult", "unroll_exact", "unroll_transient", "DEFAULT_NODE_BUDGET"]

DEFAULT_NODE_BUDGET = 2_000_000


class BudgetExceededError(RuntimeError):
    def __init__(self, nodes: int, budget: int):
        super().__init__(
            f"unrolling exceeded the node budget: {nodes} nodes projected, budget {budget}"
        )
        self.nodes = nodes
        self.budget = budget


@dataclass(frozen=True)
class ExactResult:
    """Exact distributions; ``per_station`` holds None for stations that
    had already finished when unrolling started."""

    tte: DeltaQ
    per_station: tuple[DeltaQ | None, ...]
    station_loss_probabilities: tuple[Fraction | None, ...]
    nodes_expanded: int


def _to_deltaq(atoms: dict[float, Fraction], loss: Fraction) -> DeltaQ:
    delays = np.asarray(sorted(atoms))
    masses = np.asarray([float(atoms[d]) for d in sorted(atoms)])
    return DeltaQ(delays, masses, float(loss))


def _expand(
    params: WifiParams,
    specs: tuple[tuple[float, int], ...],
    roots,
    max_latency_us: float | None,
    node_budget: int,
):
    n = len(specs)
    windows = tuple(params.window(r) for r in range(params.max_retries + 1))
    t_succ = tuple(model.success_airtime(params, r, s) for r, s in specs)
    t_coll = tuple(model.collision_airtime(params, r, s) for r, s in specs)
    slot, difs, max_retries = params.slot_time, params.difs, params.max_retries

    tte_atoms: dict[float, Fraction] = {}
    tte_loss = Fraction(0)
    station_atoms: list[dict[float, Fraction]] = [{} for _ in range(n)]
    station_loss = [Fraction(0) for _ in range(n)]

    def prune(active, prob):
        nonlocal tte_loss
        tte_loss += prob
        for i in range(n):
            if active[i]:
                station_loss[i] += prob

    nodes = 0
    # Stack entries: (backoffs, retries, active, elapsed, prob).
    stack = []
    for root in roots:
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceededError(nodes, node_budget)
        stack.append(root)

    while stack:
        backoffs, retries, active, elapsed, prob = stack.pop()
        if max_latency_us is not None and elapsed > max_latency_us:
            prune(active, prob)
            continue
        zeros = [i for i in range(n) if active[i] and backoffs[i] == 0]

        if not zeros:
            child_elapsed = elapsed + slot
            child_backoffs = tuple(
                b - 1 if active[i] else b for i, b in enumerate(backoffs)
            )
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(nodes, node_budget)
            stack.append((child_backoffs, retries, active, child_elapsed, prob))
            continue

        if len(zeros) == 1:
            winner = zeros[0]
            child_elapsed = elapsed + t_succ[winner]
            if max_latency_us is not None and child_elapsed > max_latency_us:
                prune(active, prob)
                continue
            completion = child_elapsed + difs
            station_atoms[winner][completion] = (
                station_atoms[winner].get(completion, Fraction(0)) + prob
            )
            child_active = tuple(a and i != winner for i, a in enumerate(active))
            if not any(child_active):
                tte_atoms[completion] = tte_atoms.get(completion, Fraction(0)) + prob
                continue
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(nodes, node_budget)
            stack.append((backoffs, retries, child_active, child_elapsed, prob))
            continue

        child_elapsed = elapsed + max(t_coll[i] for i in zeros)
        if max_latency_us is not None and child_elapsed > max_latency_us:
            prune(active, prob)
            continue
        dropped = [i for i in zeros if retries[i] == max_retries]
        survivors = [i for i in zeros if retries[i] < max_retries]
        for i in dropped:
            station_loss[i] += prob
        child_active = tuple(a and i not in dropped for i, a in enumerate(active))
        child_retries = tuple(
            r + 1 if i in survivors else r for i, r in enumerate(retries)
        )
        if not any(child_active):
            completion = child_elapsed + difs
            tte_atoms[completion] = tte_atoms.get(completion, Fraction(0)) + prob
            continue
        redraw_windows = [windows[child_retries[i]] for i in survivors]
        branch_prob = prob
        for w in redraw_windows:
            branch_prob /= w
        for draws in itertools.product(*(range(w) for w in redraw_windows)):
            child_backoffs = list(backoffs)
            for i, b in zip(survivors, draws):
                child_backoffs[i] = b
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(nodes, node_budget)
            stack.append(
                (tuple(child_backoffs), child_retries, child_active, child_elapsed, branch_prob)
            )

    return tte_atoms, tte_loss, station_atoms, station_loss, nodes


def _finish(
    tte_atoms, tte_loss, station_atoms, station_loss, nodes, observed
) -> ExactResult:
    total = sum(tte_atoms.values(), tte_loss)
    if total != 1:
        raise AssertionError(f"probability mass leaked: total {total}")
    per_station: list[DeltaQ | None] = []
    losses: list[Fraction | None] = []
    for i, (atoms, loss) in enumerate(zip(station_atoms, station_loss)):
        if not observed[i]:
            per_station.append(None)
            losses.append(None)
            continue
        if sum(atoms.values(), loss) != 1:
            raise AssertionError("per-station probability mass leaked")
        per_station.append(_to_deltaq(atoms, loss))
        losses.append(loss)
    return ExactResult(
        tte=_to_deltaq(tte_atoms, tte_loss),
        per_station=tuple(per_station),
        station_loss_probabilities=tuple(losses),
        nodes_expanded=nodes,
    )


def unroll_exact(
    initial: model.SystemState,
    params: WifiParams,
    max_latency_us: float | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ExactResult:
    """Unroll from one concrete starting state.

    With ``max_latency_us`` set, any path still running past the limit
    counts as loss (for the system and for every station not yet done);
    unbounded, the only per-station loss is exhausting the retry budget and
    the TTE distribution is proper.
    """
    specs = tuple((s.data_rate, s.packet_size) for s in initial.stations)
    observed = tuple(s.active for s in initial.stations)
    if not any(observed):
        raise ValueError("no active stations: nothing to unroll")
    root = (
        tuple(s.backoff for s in initial.stations),
        tuple(s.retry for s in initial.stations),
        observed,
        initial.elapsed_us,
        Fraction(1),
    )
    return _finish(*_expand(params, specs, [root], max_latency_us, node_budget), observed)


def unroll_transient(
    params: WifiParams,
    n_stations: int | None = None,
    stations: list[tuple[float, int]] | None = None,
    max_latency_us: float | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ExactResult:
    """Unroll a synchronized single-packet start, mixing over every equally
    likely initial back-off assignment."""
    if stations is None:
        if n_stations is None or n_stations < 1:
            raise ValueError("need n_stations >= 1 or an explicit station list")
        stations = [(params.default_data_rate, params.default_packet_size)] * n_stations
    specs = tuple((float(r), int(s)) for r, s in stations)
    n = len(specs)
    w0 = params.window(0)
    root_prob = Fraction(1, w0**n)
    retries = (0,) * n
    active = (True,) * n
    roots = (
        (draws, retries, active, 0.0, root_prob)
        for draws in itertools.product(range(w0), repeat=n)
    )
    return _finish(*_expand(params, specs, roots, max_latency_us, node_budget), active)
