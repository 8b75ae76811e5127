"""Age-aware device selection and transmit-power control for over-the-air federated learning."""

from airsched.aircomp import (
    AggregateStats,
    AggregationResult,
    aggregate_stats,
    aggregation_error,
    cumulative_update,
    denormalize,
    device_stats,
    normalize,
    transmit_and_aggregate,
)
from airsched.channel import ChannelParams, ChannelRealization, NoiseModel, realize_round
from airsched.power import PowerPlan, alternating_optimize, optimal_alpha_offline, optimal_eta
from airsched.scheduler import AoIState, SelectionDecision, greedy_select, update_paoi

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "AggregationResult",
    "AoIState",
    "ChannelParams",
    "ChannelRealization",
    "NoiseModel",
    "PowerPlan",
    "SelectionDecision",
    "aggregate_stats",
    "aggregation_error",
    "alternating_optimize",
    "cumulative_update",
    "denormalize",
    "device_stats",
    "greedy_select",
    "normalize",
    "optimal_alpha_offline",
    "optimal_eta",
    "realize_round",
    "transmit_and_aggregate",
    "update_paoi",
]
