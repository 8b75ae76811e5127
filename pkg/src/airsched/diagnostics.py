"""Analytical convergence-bound calculator for partial-participation over-the-air FL."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class BoundParams:
    smoothness: float  # L
    grad_noise: float  # xi (std, squared inside the bound)
    heterogeneity: float  # sigma_h (std)
    element_variance: float  # Gamma
    grad_norm: float  # G (std)
    dim: int
    n_devices: int
    n_selected: int
    rounds: int
    learning_rate: float
    local_iters: int
    initial_gap: float
    mse_trace: tuple = field(default=(0.0,))
    weight_skew: float = 1.0  # nu = N max q

    def __post_init__(self):
        object.__setattr__(self, "mse_trace", tuple(float(x) for x in np.atleast_1d(self.mse_trace)))
        for name in ("smoothness", "grad_noise", "heterogeneity", "element_variance",
                     "grad_norm", "initial_gap", "learning_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 1 <= self.n_selected <= self.n_devices:
            raise ValueError("need 1 <= K <= N")
        if self.rounds < 1 or self.local_iters < 1 or self.dim < 1:
            raise ValueError("rounds, local_iters and dim must be >= 1")
        if any(m < 0 for m in self.mse_trace):
            raise ValueError("MSE values must be >= 0")
        if self.weight_skew < 1 - 1e-12:
            raise ValueError("weight_skew = N max q is always >= 1")

    def rescaled(self) -> "BoundParams":
        """Constants adjusted for unequal device weights (L -> nu L, xi -> sqrt(nu) xi,
        Gamma -> sqrt(nu) Gamma)."""
        nu = self.weight_skew
        d = asdict(self)
        d.update(
            smoothness=nu * self.smoothness,
            grad_noise=math.sqrt(nu) * self.grad_noise,
            element_variance=math.sqrt(nu) * self.element_variance,
            weight_skew=1.0,
        )
        return BoundParams(**d)


TERM_NAMES = (
    "initial_optimality_gap",
    "stochastic_gradient_variance",
    "divergence_and_partial_participation",
    "time_average_mse",
    "gradient_norm",
)


def step_size_limit(L: float, phi: int) -> float:
    """Largest learning rate admitted by the bound's step-size condition."""
    if L == 0:
        return math.inf
    cands = [1 / (2 * L * phi), 1 / math.sqrt(6 * L**2 * phi**3)]
    cands.append(math.sqrt(phi - 1) / (4 * L * phi))
    return min(cands)


def aggregation_error_bound(k: int, d: int, gamma: float, mse_t: float) -> float:
    """Upper bound on the expected squared aggregation error."""
    if k < 1:
        raise ValueError("K must be >= 1")
    return d * gamma * (k + 1) / k**2 * mse_t


def convergence_bound(params: BoundParams, rescale: bool = False) -> dict:
    """Evaluate the five-term gradient-norm bound literally.

    The common denominator ``lr (phi - 1) - 4`` is negative for any practical
    step size; the value is still computed and ``flags`` says so.
    """
    p = params.rescaled() if rescale else params
    lam, L, phi = p.learning_rate, p.smoothness, p.local_iters
    N, K, T = p.n_devices, p.n_selected, p.rounds
    xi2, sh2, G2 = p.grad_noise**2, p.heterogeneity**2, p.grad_norm**2
    den = lam * (phi - 1) - 4
    if den == 0:
        raise ZeroDivisionError("lr (phi - 1) - 4 is zero")
    participation = 0.0 if K == N else (N - K) / ((N - 1) * K)
    mse_avg = float(np.mean(p.mse_trace))

    terms = {
        "initial_optimality_gap": 4 * p.initial_gap / (den * T),
        "stochastic_gradient_variance": 4 * phi * (4 * lam**3 * L**2 * phi**2 + 3 * lam) / (3 * den) * xi2,
        "divergence_and_partial_participation": 16 * lam * phi**2 * sh2 / den
        * ((2 + L) * participation + lam**2 * L**2 * phi),
        "time_average_mse": 2 * lam * (1 + 2 * lam * L) / den
        * aggregation_error_bound(K, p.dim, p.element_variance, 1.0) * mse_avg,
        "gradient_norm": 4 * L**2 * lam**2 / den * G2,
    }
    limit = step_size_limit(L, phi)
    flags = []
    if den < 0:
        flags.append("negative_denominator")
    if lam > limit:
        flags.append("learning_rate_above_limit")
    if phi < 2:
        flags.append("local_iters_below_2")
    return {
        "terms": terms,
        "total": float(sum(terms.values())),
        "denominator": den,
        "learning_rate_limit": limit,
        "flags": flags,
        "rescaled": bool(rescale),
    }
