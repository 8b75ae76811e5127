"""Comparison policies: fixed-power and channel-inversion transmission,
random (FedAvg) and deadline-dropping (HybridFL) selection."""

from __future__ import annotations

import enum

import numpy as np

from airsched.power import PowerPlan, full_power_alpha, optimal_eta


class Policy(str, enum.Enum):
    FEDAIRAOI = "fedairaoi"
    FULL_POWER = "full_power"
    CHANNEL_INVERSION = "channel_inversion"
    FEDAVG = "fedavg"
    HYBRIDFL = "hybridfl"


class AllDeactivatedError(RuntimeError):
    """Every selected device is too deeply faded to invert its channel."""


def full_power_plan(gains, pbar, pmax, sigma2, mask=None) -> PowerPlan:
    """Every transmitting device spends exactly its average power each round."""
    gains = np.atleast_2d(np.asarray(gains, float))
    mask = np.ones_like(gains, dtype=bool) if mask is None else np.atleast_2d(mask)
    pmax = np.broadcast_to(np.asarray(pmax, float), gains.shape[1:])
    pbar = np.broadcast_to(np.asarray(pbar, float), gains.shape[1:])
    if np.any(pbar > pmax):
        raise ValueError("pbar must not exceed pmax")
    alpha = full_power_alpha(pbar, pmax, mask)
    eta = optimal_eta(alpha, gains, pmax, sigma2, mask)
    return PowerPlan(alpha=alpha, eta=np.atleast_1d(eta))


def channel_inversion_plan(gains, eta_target, pmax, mask=None):
    """Invert each channel to a common received amplitude ``sqrt(eta_target)``.

    Devices that would need more than their peak power are deactivated.
    Works on one round (1-D gains). Returns ``(alpha, active)``.
    """
    gains = np.asarray(gains, float)
    if eta_target <= 0:
        raise ValueError("eta_target must be > 0")
    mask = np.ones_like(gains, dtype=bool) if mask is None else np.asarray(mask, bool)
    pmax = np.broadcast_to(np.asarray(pmax, float), gains.shape)
    with np.errstate(divide="ignore"):
        need = np.where(gains > 0, eta_target / (pmax * gains), np.inf)
    active = mask & (need <= 1.0)
    if not active.any():
        raise AllDeactivatedError("all selected devices deactivated")
    return np.where(active, need, 0.0), active


def channel_inversion_horizon(gains, pbar, pmax, sigma2, mask):
    """Channel inversion over a horizon, targeting the full-power optimal eta.

    Rounds where every selected device deactivates keep ``alpha = 0``.
    Returns ``(plan, active)``.
    """
    gains = np.atleast_2d(np.asarray(gains, float))
    mask = np.atleast_2d(np.asarray(mask, bool))
    target = full_power_plan(gains, pbar, pmax, sigma2, mask).eta
    alpha = np.zeros_like(gains)
    active = np.zeros_like(mask)
    for t in range(gains.shape[0]):
        try:
            alpha[t], active[t] = channel_inversion_plan(gains[t], target[t], pmax, mask[t])
        except AllDeactivatedError:
            pass
    return PowerPlan(alpha=alpha, eta=target), active


def fedavg_select(n_devices: int, k_fixed: int, rng: np.random.Generator) -> np.ndarray:
    if not 1 <= k_fixed <= n_devices:
        raise ValueError("k_fixed must lie in [1, N]")
    return np.sort(rng.choice(n_devices, size=k_fixed, replace=False))


def hybridfl_select(n_devices, k_fixed, deadline, total_times, rng) -> np.ndarray:
    """Random subset with members slower than ``deadline`` dropped (may be empty)."""
    if not deadline > 0:
        raise ValueError("deadline must be > 0")
    chosen = fedavg_select(n_devices, k_fixed, rng)
    t = np.asarray(total_times, float)
    return chosen[t[chosen] <= deadline]
