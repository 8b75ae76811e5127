"""Block-fading Rayleigh channels and SNR bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    """Large-scale channel parameters.

    ``distances`` holds one static device-to-server distance per device.
    """

    distances: np.ndarray
    frequency_correlation: float = 1.0
    path_loss_exponent: float = 2.0
    noise_scale: float = 1.0

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.distances, dtype=float))
        object.__setattr__(self, "distances", d)
        if self.frequency_correlation <= 0:
            raise ValueError("frequency_correlation must be > 0")
        if self.path_loss_exponent < 0:
            raise ValueError("path_loss_exponent must be >= 0")
        if self.noise_scale <= 0:
            raise ValueError("noise_scale must be > 0")
        if np.any(d <= 0):
            raise ValueError("all distances must be > 0")

    @property
    def n_devices(self) -> int:
        return self.distances.size

    def large_scale(self) -> np.ndarray:
        """Per-device deterministic factor multiplying ``|v|^2``."""
        return (
            self.frequency_correlation
            * self.distances ** (-self.path_loss_exponent)
            * self.noise_scale ** (-2.0)
        )


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float
    pbar: np.ndarray
    pmax: np.ndarray

    def __post_init__(self):
        pbar = np.atleast_1d(np.asarray(self.pbar, dtype=float))
        pmax = np.atleast_1d(np.asarray(self.pmax, dtype=float))
        object.__setattr__(self, "pbar", pbar)
        object.__setattr__(self, "pmax", pmax)
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be > 0")
        if pbar.shape != pmax.shape:
            raise ValueError("pbar and pmax must have the same shape")
        if np.any(pbar <= 0) or np.any(pbar > pmax):
            raise ValueError("need 0 < pbar <= pmax for every device")


@dataclass(frozen=True)
class ChannelRealization:
    """Channel state of every device for one round.

    ``gains`` is ``|h|^2``; it is derived from ``coefficients`` and the two
    always agree.
    """

    coefficients: np.ndarray
    round_index: int
    gains: np.ndarray = field(init=False)

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        object.__setattr__(self, "coefficients", h)
        object.__setattr__(self, "gains", np.abs(h) ** 2)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coefficients)


def sample_small_scale(rng: np.random.Generator, size=None):
    """Draw CN(0, 1) small-scale fading coefficients (unit second moment)."""
    scale = np.sqrt(0.5)
    v = rng.normal(0.0, scale, size=size) + 1j * rng.normal(0.0, scale, size=size)
    return v


def channel_gain(v, params: ChannelParams, device_index: int) -> float:
    r = params.distances[device_index]
    if r <= 0 or params.noise_scale <= 0:
        raise ValueError("distance and noise_scale must be positive")
    return (
        np.abs(v) ** 2
        * params.frequency_correlation
        * r ** (-params.path_loss_exponent)
        * params.noise_scale ** (-2.0)
    )


def realize_round(
    params: ChannelParams, n_devices: int, round_index: int, rng: np.random.Generator
) -> ChannelRealization:
    """One independent block-fading draw for every device.

    The returned coefficient already includes the large-scale attenuation, so
    ``|h|^2`` matches :func:`channel_gain` of the underlying small-scale draw.
    """
    if n_devices < 1:
        raise ValueError("n_devices must be >= 1")
    if n_devices != params.n_devices:
        raise ValueError(
            f"params describe {params.n_devices} devices, asked for {n_devices}"
        )
    v = sample_small_scale(rng, size=n_devices)
    h = v * np.sqrt(params.large_scale())
    return ChannelRealization(coefficients=h, round_index=round_index)


def noise_variance_from_snr(pbar, snr_db):
    """sigma^2 such that pbar / sigma^2 equals the given SNR in dB."""
    pbar = np.asarray(pbar, dtype=float)
    if np.any(pbar <= 0):
        raise ValueError("pbar must be > 0")
    out = pbar / 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out
