"""Improper latency distributions and their composition algebra.

A value assigns probability mass to finite delivery delays (microseconds)
and keeps the remainder as explicit loss mass, so one object answers both
"how long?" and "how likely is never?".  Sequential stages compose by
convolution, alternative paths by probability-weighted mixture.  Instances
are immutable; every operation returns a new value.

Two construction routes exist: exact atoms (enumeration) and empirical
samples (simulation).  Samples convert to atoms by exact multiset, so both
share a single query interface; the reverse direction is deliberately not
offered.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "MASS_TOLERANCE",
    "DeltaQ",
    "QuantileEstimate",
    "point_mass",
    "loss_only",
    "from_samples",
    "convolve",
    "mixture",
    "ks_distance",
    "write_cdf_csv",
    "read_cdf_csv",
]

#: Absolute tolerance for probability-mass bookkeeping.
MASS_TOLERANCE = 1e-9

# Slack when deciding whether a quantile falls inside the delivered mass,
# so that q == delivered mass (up to rounding) still resolves.
_QUANTILE_SLACK = 1e-12

# Refuse convolutions whose raw atom product would not fit in memory.
_MAX_CONVOLUTION_ATOMS = 20_000_000


def _merged(delays: np.ndarray, masses: np.ndarray, coalesce_us: float):
    """Sort atoms by delay, merge equal delays, drop zero mass.

    With ``coalesce_us > 0`` nearby atoms are additionally grouped; the
    group delay is the mass-weighted mean, which keeps the distribution
    mean exact.
    """
    uniq, inverse = np.unique(delays, return_inverse=True)
    mass = np.bincount(inverse, weights=masses, minlength=uniq.size)
    keep = mass > 0.0
    uniq, mass = uniq[keep], mass[keep]
    if coalesce_us > 0.0 and uniq.size > 1:
        out_d, out_m = [], []
        start = 0
        for i in range(1, uniq.size + 1):
            if i == uniq.size or uniq[i] - uniq[start] > coalesce_us:
                block = slice(start, i)
                total = float(mass[block].sum())
                out_d.append(float(np.dot(uniq[block], mass[block]) / total))
                out_m.append(total)
                start = i
        uniq, mass = np.asarray(out_d), np.asarray(out_m)
    return uniq, mass


@dataclass(frozen=True)
class QuantileEstimate:
    """A quantile query result.

    ``defined`` is False when the requested probability exceeds the
    delivered mass; the value is then +inf, loss being infinite latency.
    """

    q: float
    value: float
    defined: bool


@dataclass(frozen=True, eq=False)
class DeltaQ:
    """An improper one-dimensional delay distribution.

    ``delays`` holds the atom locations in microseconds, strictly
    ascending; ``masses`` the probability of each atom; ``loss_mass`` the
    probability that delivery never happens.  Masses and loss must sum to
    one within :data:`MASS_TOLERANCE`.
    """

    delays: np.ndarray
    masses: np.ndarray
    loss_mass: float
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        delays = np.ascontiguousarray(self.delays, dtype=float)
        masses = np.ascontiguousarray(self.masses, dtype=float)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "loss_mass", float(self.loss_mass))
        if delays.ndim != 1 or masses.ndim != 1 or delays.size != masses.size:
            raise ValueError("delays and masses must be 1-D arrays of equal length")
        if delays.size and not np.isfinite(delays).all():
            raise ValueError("delays must be finite")
        if delays.size and delays.min() < 0.0:
            raise ValueError("delays must be non-negative")
        if delays.size > 1 and not (np.diff(delays) > 0.0).all():
            raise ValueError("delays must be strictly ascending (merge atoms first)")
        if masses.size and masses.min() <= 0.0:
            raise ValueError("atom masses must be positive")
        if not -MASS_TOLERANCE <= self.loss_mass <= 1.0 + MASS_TOLERANCE:
            raise ValueError(f"loss mass {self.loss_mass} outside [0, 1]")
        total = float(masses.sum()) + self.loss_mass
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"masses and loss sum to {total}, expected 1")
        object.__setattr__(self, "_cum", np.concatenate(([0.0], np.cumsum(masses))))

    # -- construction ------------------------------------------------------

    @classmethod
    def from_atoms(
        cls,
        delays: Sequence[float] | np.ndarray,
        masses: Sequence[float] | np.ndarray,
        loss_mass: float = 0.0,
        coalesce_us: float = 0.0,
    ) -> "DeltaQ":
        """Build a distribution from unsorted, possibly duplicated atoms."""
        d = np.asarray(delays, dtype=float)
        m = np.asarray(masses, dtype=float)
        if d.size and m.size and m.min() < 0.0:
            raise ValueError("atom masses must be non-negative")
        d, m = _merged(d, m, coalesce_us)
        return cls(d, m, loss_mass)

    # -- queries -----------------------------------------------------------

    @property
    def delivered_mass(self) -> float:
        return float(self._cum[-1])

    @property
    def atom_count(self) -> int:
        return int(self.delays.size)

    def cdf(self, delay):
        """P(delivered with delay <= ``delay``); accepts scalars or arrays."""
        x = np.asarray(delay, dtype=float)
        idx = np.searchsorted(self.delays, x, side="right")
        out = self._cum[idx]
        return float(out) if np.isscalar(delay) or x.ndim == 0 else out

    def quantile(self, q: float) -> QuantileEstimate:
        """Smallest delay at which the CDF reaches ``q`` (0 < q < 1)."""
        if not 0.0 < q < 1.0:
            raise ValueError(f"quantile order must be in (0, 1), got {q}")
        if self.delays.size == 0 or q > self.delivered_mass + _QUANTILE_SLACK:
            return QuantileEstimate(q, math.inf, False)
        # The slack absorbs accumulated rounding in the cumulative sums, so
        # ten 0.1 masses still resolve q = 0.9 at the ninth atom.
        i = int(np.searchsorted(self._cum[1:], q - _QUANTILE_SLACK, side="left"))
        i = min(i, self.delays.size - 1)
        return QuantileEstimate(q, float(self.delays[i]), True)

    def mean_delivered(self) -> float:
        """Mean delay conditional on delivery."""
        delivered = float(self.masses.sum())
        if delivered <= 0.0:
            raise ValueError("mean of an all-loss distribution is undefined")
        return float(np.dot(self.delays, self.masses) / delivered)

    def convolve(self, other: "DeltaQ", coalesce_us: float = 0.0) -> "DeltaQ":
        return convolve(self, other, coalesce_us=coalesce_us)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"DeltaQ(atoms={self.atom_count}, delivered={self.delivered_mass:.6g}, "
            f"loss={self.loss_mass:.6g})"
        )


def point_mass(delay: float) -> DeltaQ:
    """Distribution that always delivers after exactly ``delay`` microseconds."""
    if not math.isfinite(delay) or delay < 0.0:
        raise ValueError(f"point mass delay must be finite and non-negative, got {delay}")
    return DeltaQ(np.asarray([float(delay)]), np.asarray([1.0]), 0.0)


def loss_only() -> DeltaQ:
    """Distribution that never delivers."""
    return DeltaQ(np.empty(0), np.empty(0), 1.0)


def from_samples(delays: Sequence[float] | np.ndarray, losses: int = 0) -> DeltaQ:
    """Empirical distribution from delivered delay samples plus a loss count.

    Each delivered sample and each loss carries equal weight
    1 / (len(delays) + losses).  ``([], k)`` with k > 0 yields the all-loss
    distribution; a fully empty input is rejected.
    """
    d = np.asarray(delays, dtype=float)
    if d.ndim != 1:
        raise ValueError("samples must form a 1-D sequence")
    losses = int(losses)
    if losses < 0:
        raise ValueError("loss count must be non-negative")
    total = d.size + losses
    if total == 0:
        raise ValueError("no delivered samples and no losses: empty input")
    if d.size:
        if not np.isfinite(d).all():
            raise ValueError("delay samples must be finite")
        if d.min() < 0.0:
            raise ValueError("delay samples must be non-negative")
    uniq, counts = np.unique(d, return_counts=True)
    return DeltaQ(uniq, counts / total, losses / total)


def convolve(a: DeltaQ, b: DeltaQ, coalesce_us: float = 0.0) -> DeltaQ:
    """Distribution of the sum of two independent stages.

    Delivered fractions multiply; equivalently the loss masses combine as
    ``la + lb - la*lb``, written in that form so that convolving with
    point_mass(0) reproduces the other operand exactly.
    """
    if a.delays.size * b.delays.size > _MAX_CONVOLUTION_ATOMS:
        raise ValueError(
            f"convolution would generate {a.delays.size * b.delays.size} raw atoms; "
            "coalesce the operands first"
        )
    d = (a.delays[:, None] + b.delays[None, :]).ravel()
    m = (a.masses[:, None] * b.masses[None, :]).ravel()
    loss = a.loss_mass + b.loss_mass - a.loss_mass * b.loss_mass
    return DeltaQ.from_atoms(d, m, loss, coalesce_us=coalesce_us)


def mixture(
    components: Iterable[tuple[float, DeltaQ]], coalesce_us: float = 0.0
) -> DeltaQ:
    """Probability-weighted choice between alternative distributions.

    Weights must be positive and sum to one within :data:`MASS_TOLERANCE`;
    the result's loss mass is the same weighted combination of the
    component losses.
    """
    parts = list(components)
    if not parts:
        raise ValueError("mixture of zero components")
    weights = [float(w) for w, _ in parts]
    if min(weights) <= 0.0:
        raise ValueError("mixture weights must be positive")
    if abs(sum(weights) - 1.0) > MASS_TOLERANCE:
        raise ValueError(f"mixture weights sum to {sum(weights)}, expected 1")
    d = np.concatenate([c.delays for _, c in parts])
    m = np.concatenate([w * c.masses for w, c in parts])
    loss = sum(w * c.loss_mass for w, c in parts)
    return DeltaQ.from_atoms(d, m, loss, coalesce_us=coalesce_us)


def ks_distance(a: DeltaQ, b: DeltaQ) -> float:
    """Kolmogorov-Smirnov distance between two (possibly improper) CDFs.

    Both CDFs are step functions, so the supremum is attained on the union
    of their supports; the gap between delivered masses is picked up at the
    largest atom.
    """
    grid = np.union1d(a.delays, b.delays)
    if grid.size == 0:
        return 0.0
    return float(np.max(np.abs(a.cdf(grid) - b.cdf(grid))))


def write_cdf_csv(d: DeltaQ, path: str | Path) -> None:
    """Write ``delay_us,cdf`` rows, ascending; the final cdf value is the
    delivered mass, leaving the loss visible as the gap to 1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay_us", "cdf"])
        cum = d._cum[1:]
        for delay, level in zip(d.delays, cum):
            writer.writerow([float(delay), float(level)])


def read_cdf_csv(path: str | Path) -> DeltaQ:
    """Rebuild a distribution from a CDF CSV written by :func:`write_cdf_csv`."""
    delays: list[float] = []
    levels: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["delay_us", "cdf"]:
            raise ValueError(f"{path}: not a CDF file (header {header})")
        for row in reader:
            delays.append(float(row[0]))
            levels.append(float(row[1]))
    if not delays:
        return loss_only()
    masses = np.diff(np.asarray(levels), prepend=0.0)
    return DeltaQ(np.asarray(delays), masses, 1.0 - levels[-1])
