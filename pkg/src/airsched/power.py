"""Receive normalisation and transmit-power allocation minimising aggregation MSE.

Arrays are laid out as (rounds, devices). ``gains`` are squared channel
magnitudes ``|h|^2``; phase is assumed perfectly pre-compensated, so only
magnitudes enter the error model. ``mask`` marks which devices transmit in
which round; masked-out entries carry ``alpha = 0`` and are ignored by the
MSE.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

EPSILON0 = 1e-5


class BisectionError(RuntimeError):
    pass


class DegenerateError(ValueError):
    pass


@dataclass
class PowerPlan:
    alpha: np.ndarray  # (T, N)
    eta: np.ndarray  # (T,)
    iterations: int = 0
    mse_history: list = field(default_factory=list)
    gamma: np.ndarray | None = None

    def __post_init__(self):
        self.alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if np.any(self.alpha < 0) or np.any(self.alpha > 1):
            raise ValueError("alpha must lie in [0, 1]")
        if np.any(~(self.eta > 0)):
            raise ValueError("eta must be > 0")

    def average_power(self, pmax, horizon=None) -> np.ndarray:
        horizon = self.alpha.shape[0] if horizon is None else horizon
        return self.alpha.sum(axis=0) * np.asarray(pmax, float) / horizon

    def satisfies_budget(self, pmax, pbar, horizon=None, tol=1e-9) -> bool:
        return bool(np.all(self.average_power(pmax, horizon) <= np.asarray(pbar, float) + tol))


@dataclass(frozen=True)
class MseBreakdown:
    misalignment: np.ndarray
    noise: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.misalignment + self.noise

    @property
    def time_average(self) -> float:
        return float(np.mean(self.total))


def _amplitudes(alphas, gains, pmaxes):
    """Received amplitude before normalisation, ``sqrt(alpha Pmax) |h|``."""
    return np.sqrt(np.asarray(alphas, float) * np.asarray(pmaxes, float) * np.asarray(gains, float))


def instantaneous_mse(alphas, eta, gains, pmaxes, sigma2, mask=None):
    """Per-round MSE split into misalignment and noise parts.

    Works on one round (1-D device arrays, scalar ``eta``) or on a horizon
    ((T, N) arrays, ``eta`` of shape (T,)). Returns ``(misalignment, noise)``.
    """
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("eta must be > 0")
    b = _amplitudes(alphas, gains, pmaxes)
    e = eta[..., None] if b.ndim > eta.ndim else eta
    dev = (b / np.sqrt(e) - 1.0) ** 2
    if mask is not None:
        dev = np.where(mask, dev, 0.0)
    mis = dev.sum(axis=-1)
    noise = sigma2 / eta
    return mis, noise * np.ones_like(mis)


def mse_breakdown(plan: PowerPlan, gains, pmaxes, sigma2, mask=None) -> MseBreakdown:
    mis, noise = instantaneous_mse(plan.alpha, plan.eta, gains, pmaxes, sigma2, mask)
    return MseBreakdown(np.atleast_1d(mis), np.atleast_1d(noise))


def time_average_mse(plan: PowerPlan, gains, pmaxes, sigma2, mask=None) -> float:
    return mse_breakdown(plan, gains, pmaxes, sigma2, mask).time_average


def optimal_eta(alphas, gains, pmaxes, sigma2, mask=None):
    """Closed-form MSE-minimising receive normalising factor.

    ``((sigma^2 + sum b^2) / sum b)^2`` with ``b = sqrt(alpha Pmax) |h|``.
    """
    b = _amplitudes(alphas, gains, pmaxes)
    if mask is not None:
        b = np.where(mask, b, 0.0)
    s1 = b.sum(axis=-1)
    if np.any(s1 <= 0):
        raise DegenerateError("every round needs at least one device with positive amplitude")
    s2 = (b**2).sum(axis=-1)
    out = ((sigma2 + s2) / s1) ** 2
    return float(out) if np.ndim(out) == 0 else out


def _alpha_of_gamma(eta, gains, pmax, gamma):
    """Stationary point of the per-round Lagrangian, clipped to [0, 1].

    ``eta g / (Pmax (g + gamma eta)^2)``; zero-gain rounds get 0.
    """
    g = np.asarray(gains, float)
    denom = pmax * (g + gamma * eta) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(g > 0, eta * g / denom, 0.0)
    return np.minimum(a, 1.0)


def optimal_alpha_offline(
    etas,
    gains,
    pmax,
    pbar,
    horizon=None,
    mask=None,
    tol=1e-10,
    max_iter=200,
    return_gamma=False,
):
    """Optimal power coefficients given the normalising factors.

    Per device the problem is separable across devices and convex. If
    capped channel inversion fits in the average-power budget it is optimal
    (multiplier zero); otherwise the budget binds and the multiplier is found
    by bisection so the coefficients spend exactly ``horizon * pbar / pmax``.

    ``gains``/``mask`` may be 1-D (one device over rounds) or (T, N); ``pmax``
    and ``pbar`` are scalars or (N,). ``horizon`` defaults to the number of
    rows and is the T in the average-power constraint.
    """
    etas = np.asarray(etas, float)
    gains = np.asarray(gains, float)
    single = gains.ndim == 1
    if single:
        gains = gains[:, None]
        mask = None if mask is None else np.asarray(mask, bool)[:, None]
    n_rounds, n_dev = gains.shape
    if etas.shape != (n_rounds,):
        raise ValueError("need one eta per round")
    if np.any(etas <= 0):
        raise ValueError("eta must be > 0")
    mask = np.ones_like(gains, dtype=bool) if mask is None else np.asarray(mask, bool)
    pmax = np.broadcast_to(np.asarray(pmax, float), (n_dev,))
    pbar = np.broadcast_to(np.asarray(pbar, float), (n_dev,))
    if np.any(pbar <= 0) or np.any(pmax < pbar):
        raise ValueError("need pmax >= pbar > 0")
    horizon = n_rounds if horizon is None else horizon
    budget = horizon * pbar / pmax

    eta_col = etas[:, None]

    def total(gamma):
        a = _alpha_of_gamma(eta_col, gains, pmax, gamma)
        return np.where(mask, a, 0.0), np.where(mask, a, 0.0).sum(axis=0)

    alpha, spent = total(np.zeros(n_dev))
    gamma = np.zeros(n_dev)
    tight = spent > budget
    if np.any(tight):
        lo = np.zeros(n_dev)
        hi = np.ones(n_dev)
        for _ in range(max_iter):
            _, s = total(hi)
            grow = tight & (s >= budget)
            if not grow.any():
                break
            hi = np.where(grow, 2.0 * hi, hi)
        else:
            raise BisectionError("could not bracket the power multiplier")
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            _, s = total(mid)
            over = s > budget
            lo = np.where(tight & over, mid, lo)
            hi = np.where(tight & ~over, mid, hi)
            _, s_hi = total(hi)
            done = ~tight | (budget - s_hi <= tol) | (hi - lo <= 4 * np.spacing(hi))
            if done.all():
                break
        gamma = np.where(tight, hi, 0.0)
        alpha, spent = total(gamma)
        resid = np.abs(spent - budget)[tight]
        if np.any(resid > max(tol, 1e-8)):
            raise BisectionError(f"budget residual {resid.max():.3g} above tolerance")

    if single:
        alpha, gamma = alpha[:, 0], gamma[0]
    if return_gamma:
        return alpha, gamma
    return alpha


def full_power_alpha(pbar, pmax, mask):
    """Constant ``pbar / pmax`` on every transmitting slot."""
    ratio = np.minimum(np.asarray(pbar, float) / np.asarray(pmax, float), 1.0)
    return np.where(mask, ratio, 0.0)


def alternating_optimize(
    gains,
    pmax,
    pbar,
    sigma2,
    epsilon0=EPSILON0,
    mask=None,
    horizon=None,
    alpha0=None,
    max_iter=10_000,
) -> PowerPlan:
    """Alternate closed-form eta and bisection alpha updates until the
    relative MSE improvement falls below ``epsilon0``.

    Starts from full average power unless ``alpha0`` is given.
    ``mse_history[0]`` is the MSE of the initial coefficients paired with their
    optimal eta; entry ``i`` is the MSE after iteration ``i``.
    """
    if epsilon0 <= 0:
        raise ValueError("epsilon0 must be > 0")
    gains = np.atleast_2d(np.asarray(gains, float))
    mask = np.ones_like(gains, dtype=bool) if mask is None else np.asarray(mask, bool)
    n_dev = gains.shape[1]
    pmax = np.broadcast_to(np.asarray(pmax, float), (n_dev,))
    pbar = np.broadcast_to(np.asarray(pbar, float), (n_dev,))
    alpha = full_power_alpha(pbar, pmax, mask) if alpha0 is None else np.where(mask, alpha0, 0.0)

    horizon_ = gains.shape[0] if horizon is None else horizon
    if np.all(alpha.sum(axis=0) * pmax <= horizon_ * pbar * (1 + 1e-12)):
        eta = optimal_eta(alpha, gains, pmax, sigma2, mask)
        mse = _avg_mse(alpha, eta, gains, pmax, sigma2, mask)
    else:
        # an over-budget start has no valid objective value
        mse = np.inf
    history = [mse]
    gamma = np.zeros(n_dev)
    it = 0
    while it < max_iter:
        it += 1
        eta = optimal_eta(alpha, gains, pmax, sigma2, mask)
        alpha, gamma = optimal_alpha_offline(
            eta, gains, pmax, pbar, horizon=horizon, mask=mask, return_gamma=True
        )
        prev, mse = mse, _avg_mse(alpha, eta, gains, pmax, sigma2, mask)
        history.append(mse)
        if mse == 0.0 or (prev - mse) / mse < epsilon0:
            break
    else:
        log.warning("alternating optimisation hit the iteration cap (%d)", max_iter)
    return PowerPlan(alpha=alpha, eta=np.atleast_1d(eta), iterations=it, mse_history=history, gamma=gamma)


def _avg_mse(alpha, eta, gains, pmax, sigma2, mask):
    mis, noise = instantaneous_mse(alpha, eta, gains, pmax, sigma2, mask)
    return float(np.mean(mis + noise))


def _dual_step(gamma, alpha, pmax, pbar, step):
    return np.maximum(0.0, gamma + step * (alpha * pmax - pbar))


def online_alpha_step(gain_t, eta_t, gamma_t, pmax, pbar, step=None):
    """One round of the online allocation: closed-form alpha at the current
    multiplier, then a projected dual-ascent step on the power budget."""
    gamma_t = np.asarray(gamma_t, float)
    if np.any(gamma_t < 0):
        raise ValueError("gamma must be >= 0")
    pmax = np.asarray(pmax, float)
    step = 0.1 / pmax if step is None else step
    alpha = _alpha_of_gamma(eta_t, gain_t, pmax, gamma_t)
    gamma_next = _dual_step(gamma_t, alpha, pmax, np.asarray(pbar, float), step)
    if np.ndim(alpha) == 0:
        return float(alpha), float(gamma_next)
    return alpha, gamma_next


def online_optimize(gains, pmax, pbar, sigma2, mask=None, step=None, inner_tol=1e-10, inner_max=200):
    """Round-by-round allocation that only uses the current round's channels.

    Within a round, eta and alpha alternate at the current multipliers; the
    multipliers then take a dual-ascent step on the power actually spent.
    Idle devices spend nothing, which relaxes their multiplier.
    """
    gains = np.atleast_2d(np.asarray(gains, float))
    n_rounds, n_dev = gains.shape
    mask = np.ones_like(gains, dtype=bool) if mask is None else np.asarray(mask, bool)
    pmax = np.broadcast_to(np.asarray(pmax, float), (n_dev,))
    pbar = np.broadcast_to(np.asarray(pbar, float), (n_dev,))
    step = 0.1 / pmax if step is None else np.broadcast_to(np.asarray(step, float), (n_dev,))
    gamma = np.zeros(n_dev)
    alpha = np.zeros_like(gains)
    eta = np.ones(n_rounds)
    for t in range(n_rounds):
        m = mask[t]
        if m.any():
            a = full_power_alpha(pbar, pmax, m)
            e_t = optimal_eta(a, gains[t], pmax, sigma2, m)
            prev = np.inf
            for _ in range(inner_max):
                a = np.where(m, _alpha_of_gamma(e_t, gains[t], pmax, gamma), 0.0)
                e_t = optimal_eta(a, gains[t], pmax, sigma2, m)
                cur = _avg_mse(a, e_t, gains[t], pmax, sigma2, m)
                if prev - cur <= inner_tol * cur:
                    break
                prev = cur
            alpha[t], eta[t] = a, e_t
        gamma = _dual_step(gamma, alpha[t], pmax, pbar, step)
    return PowerPlan(alpha=alpha, eta=eta, iterations=n_rounds, gamma=gamma)
