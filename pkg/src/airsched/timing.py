"""Computation / communication latency of each device and of a round."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComputeProfile:
    cycles_per_sample: float
    dataset_size: int
    cpu_hz: float

    def __post_init__(self):
        if self.cycles_per_sample <= 0:
            raise ValueError("cycles_per_sample must be > 0")
        if self.dataset_size < 1:
            raise ValueError("dataset_size must be >= 1")
        if self.cpu_hz <= 0:
            raise ValueError("cpu_hz must be > 0")


@dataclass(frozen=True)
class CommProfile:
    model_size: float  # transmitted symbols
    bandwidth: float  # symbols / s

    def __post_init__(self):
        if self.model_size <= 0 or self.bandwidth <= 0:
            raise ValueError("model_size and bandwidth must be > 0")


def computation_time(profile: ComputeProfile, tau) -> float:
    """Seconds spent on local training when a fraction ``tau`` of the CPU is granted."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0) or np.any(tau > 1):
        raise ValueError("tau must lie in (0, 1]")
    out = profile.cycles_per_sample * profile.dataset_size / (tau * profile.cpu_hz)
    return float(out) if out.ndim == 0 else out


def computation_times(cycles_per_sample, dataset_sizes, cpu_hz, tau) -> np.ndarray:
    """Vectorised :func:`computation_time` over devices."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0) or np.any(tau > 1):
        raise ValueError("tau must lie in (0, 1]")
    return cycles_per_sample * np.asarray(dataset_sizes, float) / (tau * np.asarray(cpu_hz, float))


def communication_time(comm: CommProfile) -> float:
    return comm.model_size / comm.bandwidth


def total_time(compute_time, comm_time):
    return compute_time + comm_time


def completion_time(total_times, selection_mask) -> float:
    """Round duration: the slowest selected device."""
    total_times = np.asarray(total_times, dtype=float)
    mask = np.asarray(selection_mask, dtype=bool)
    if not mask.any():
        raise ValueError("completion time is undefined when no device is selected")
    return float(total_times[mask].max())


def draw_tau(rng: np.random.Generator, n_devices: int, tau_min: float = 0.2) -> np.ndarray:
    """Per-round CPU share of each device, uniform on [tau_min, 1]."""
    if not 0 < tau_min <= 1:
        raise ValueError("tau_min must lie in (0, 1]")
    return rng.uniform(tau_min, 1.0, size=n_devices)


def cpu_profile(n_devices: int, cpu_hz: float, spread: float = 1.0) -> np.ndarray:
    """Descending CPU speeds, geometrically spaced around ``cpu_hz``.

    ``spread`` is the fastest/slowest ratio; the geometric mean stays ``cpu_hz``.
    Device 0 is the fastest.
    """
    if spread < 1:
        raise ValueError("spread must be >= 1")
    if n_devices == 1:
        return np.array([float(cpu_hz)])
    half = 0.5 * np.log(spread)
    return cpu_hz * np.exp(np.linspace(half, -half, n_devices))
