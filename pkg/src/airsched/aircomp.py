"""Analog over-the-air gradient aggregation.

Each selected device normalises its cumulative update with global
statistics, transmits it with phase pre-compensation, and the server
rescales the noisy superposition back into a gradient estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from airsched.power import DegenerateError


@dataclass(frozen=True)
class GradientUpdate:
    theta: np.ndarray
    mean: float
    variance: float

    @classmethod
    def from_theta(cls, theta) -> "GradientUpdate":
        theta = np.asarray(theta, dtype=float)
        mean, var = device_stats(theta)
        return cls(theta=theta, mean=mean, variance=var)


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    variance: float
    k: int

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


@dataclass(frozen=True)
class AggregationResult:
    z_hat: np.ndarray
    theta_hat: np.ndarray
    error: np.ndarray
    ideal_z: np.ndarray


def cumulative_update(w_start, w_end, lam):
    if lam <= 0:
        raise ValueError("learning rate must be > 0")
    return (np.asarray(w_start, float) - np.asarray(w_end, float)) / lam


def device_stats(theta):
    """Mean and population variance over the components of ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.size < 1:
        raise ValueError("theta must have at least one component")
    return float(theta.mean()), float(theta.var())


def aggregate_stats(stats, q, n_devices: int, k: int | None = None) -> AggregateStats:
    """Weighted global mean/variance over the selected devices.

    ``stats`` is a sequence of (mean, variance) pairs aligned with ``q``
    (the weights of the same selected devices).
    """
    stats = np.asarray(stats, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float)
    k = len(stats) if k is None else k
    if k < 1 or k != len(stats) or q.shape != (k,):
        raise ValueError("need one weight per selected device and K >= 1")
    scale = n_devices / k
    return AggregateStats(
        mean=float(scale * np.dot(q, stats[:, 0])),
        variance=float(scale * np.dot(q, stats[:, 1])),
        k=k,
    )


def normalize(theta, global_mean, global_std):
    if not global_std > 0:
        raise DegenerateError("global std is zero; updates cannot be normalised")
    return (np.asarray(theta, float) - global_mean) / global_std


def alignment_coefficients(alphas, pmaxes, channels, eta):
    """Effective gain ``sqrt(alpha Pmax) |h| / sqrt(eta)`` seen by each device's signal.

    ``channels`` may be complex coefficients; the pre-processing factor
    removes the phase so only the magnitude survives.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    mag = np.abs(np.asarray(channels))
    return np.sqrt(np.asarray(alphas, float) * np.asarray(pmaxes, float)) * mag / np.sqrt(eta)


def transmit_and_aggregate(z, alphas, pmaxes, channels, eta, sigma2, rng):
    """Noisy superposition of the normalised signals, rescaled by ``1/sqrt(eta)``.

    ``z`` is (K, d). Receiver noise is real Gaussian with variance ``sigma2``
    per component.
    """
    z = np.atleast_2d(np.asarray(z, float))
    h = np.asarray(channels)
    # pre-compensation: sqrt(alpha Pmax) h^H / |h|, then the channel multiplies by h
    with np.errstate(invalid="ignore", divide="ignore"):
        phase = np.where(np.abs(h) > 0, np.conj(h) / np.abs(h), 0.0)
    tx = np.sqrt(np.asarray(alphas, float) * np.asarray(pmaxes, float)) * phase
    effective = np.real(h * tx)
    y = effective @ z
    if sigma2 > 0:
        y = y + rng.normal(0.0, np.sqrt(sigma2), size=z.shape[1])
    return y / np.sqrt(eta)


def denormalize(z_hat, stats: AggregateStats, k: int | None = None):
    k = stats.k if k is None else k
    if k < 1:
        raise ValueError("K must be >= 1")
    return stats.std / k * np.asarray(z_hat, float) + stats.mean


def aggregation_error(z_hat, ideal_z, stats: AggregateStats, k: int | None = None):
    """Deviation of the estimate from the noiseless aligned aggregate and its squared norm."""
    k = stats.k if k is None else k
    e = stats.std / k * (np.asarray(z_hat, float) - np.asarray(ideal_z, float))
    return e, float(e @ e)


def aircomp_round(thetas, q_selected, n_devices, alphas, pmaxes, channels, eta, sigma2, rng):
    """Run the full chain for one round on the selected devices' updates."""
    thetas = np.atleast_2d(np.asarray(thetas, float))
    k = thetas.shape[0]
    stats = aggregate_stats([device_stats(t) for t in thetas], q_selected, n_devices, k)
    z = normalize(thetas, stats.mean, stats.std)
    z_hat = transmit_and_aggregate(z, alphas, pmaxes, channels, eta, sigma2, rng)
    ideal = z.sum(axis=0)
    theta_hat = denormalize(z_hat, stats, k)
    e, _ = aggregation_error(z_hat, ideal, stats, k)
    return AggregationResult(z_hat=z_hat, theta_hat=theta_hat, error=e, ideal_z=ideal), stats


def weighting_bias(thetas, q_selected, n_devices):
    """Gap between the plain mean of selected updates (what de-normalisation
    recovers) and the weight-scaled global gradient ``(N/K) sum q theta``."""
    thetas = np.atleast_2d(np.asarray(thetas, float))
    k = thetas.shape[0]
    weighted = n_devices / k * np.asarray(q_selected, float) @ thetas
    return float(np.linalg.norm(thetas.mean(axis=0) - weighted))
