"""Latency, loss and throughput analysis for slotted DCF contention.

The package models the medium-access game as a labeled transition system
whose edge weights are improper delay distributions: probability mass over
finite delays plus explicit loss.  A Monte Carlo engine samples the system
at scale, an exact tree unroller cross-checks it on small instances, and
the analysis layer turns the resulting distributions into throughput
figures and protocol-feature trade-offs.
"""

from .analysis import (
    AnomalyResult,
    HeatmapResult,
    Throughput,
    ThroughputBound,
    amsdu_bound,
    anomaly_experiment,
    bound_from_tte,
    first_positive_size,
    rts_heatmap,
    throughput_bound,
    throughput_from_latency,
    tte_compare,
    window_sweep,
)
from .deltaq import (
    DeltaQ,
    QuantileEstimate,
    convolve,
    from_samples,
    ks_distance,
    loss_only,
    mixture,
    point_mass,
    read_cdf_csv,
    write_cdf_csv,
)
from .engine import (
    ErgodicResult,
    TransientResult,
    convergence_study,
    run_ergodic,
    run_transient,
)
from .exact import BudgetExceededError, ExactResult, unroll_exact, unroll_transient
from .model import (
    PacketEvent,
    Station,
    SystemState,
    Transition,
    TransitionKind,
    classify,
    initial_state,
    step,
    t_collision,
    t_frame,
    t_success,
)
from .params import PRESETS, ConfigError, WifiParams, preset

__version__ = "0.1.0"

__all__ = [
    "AnomalyResult",
    "BudgetExceededError",
    "ConfigError",
    "DeltaQ",
    "ErgodicResult",
    "ExactResult",
    "HeatmapResult",
    "PRESETS",
    "PacketEvent",
    "QuantileEstimate",
    "Station",
    "SystemState",
    "Throughput",
    "ThroughputBound",
    "Transition",
    "TransientResult",
    "TransitionKind",
    "WifiParams",
    "amsdu_bound",
    "anomaly_experiment",
    "bound_from_tte",
    "classify",
    "convergence_study",
    "convolve",
    "first_positive_size",
    "from_samples",
    "initial_state",
    "ks_distance",
    "loss_only",
    "mixture",
    "point_mass",
    "preset",
    "read_cdf_csv",
    "rts_heatmap",
    "run_ergodic",
    "run_transient",
    "step",
    "t_collision",
    "t_frame",
    "t_success",
    "throughput_bound",
    "throughput_from_latency",
    "tte_compare",
    "unroll_exact",
    "unroll_transient",
    "window_sweep",
    "write_cdf_csv",
    "__version__",
]
