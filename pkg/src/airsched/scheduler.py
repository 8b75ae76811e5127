"""Peak-AoI state, Lyapunov priorities and greedy priority-aware selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class AoIState:
    paoi: np.ndarray
    weights: np.ndarray
    round_index: int = 0

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.paoi, dtype=float))
        q = np.atleast_1d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "paoi", a)
        object.__setattr__(self, "weights", q)
        if a.shape != q.shape:
            raise ValueError("paoi and weights must have the same shape")
        if np.any(a < 0):
            raise ValueError("PAoI values must be >= 0")
        if np.any(q < 0) or np.any(q > 1) or abs(q.sum() - 1.0) > 1e-9:
            raise ValueError("weights must lie in [0, 1] and sum to 1")

    @classmethod
    def initial(cls, weights) -> "AoIState":
        q = np.asarray(weights, dtype=float)
        return cls(paoi=np.zeros_like(q), weights=q, round_index=0)

    @property
    def n_devices(self) -> int:
        return self.paoi.size


@dataclass(frozen=True)
class SelectionDecision:
    selected: np.ndarray  # sorted device indices
    k_opt: int
    predicted_ws_paoi: float
    completion_time: float

    def mask(self, n_devices: int) -> np.ndarray:
        m = np.zeros(n_devices, dtype=bool)
        m[self.selected] = True
        return m


def weights_from_class_counts(class_counts) -> np.ndarray:
    """Exponential device weights ``2^M / sum(2^M)``."""
    m = np.asarray(class_counts, dtype=float)
    w = np.exp2(m - m.max())
    return w / w.sum()


def update_paoi(state: AoIState, selection_mask, completion_time: float) -> AoIState:
    if completion_time < 0:
        raise ValueError("completion_time must be >= 0")
    psi = np.asarray(selection_mask, dtype=bool)
    if psi.shape != state.paoi.shape:
        raise ValueError("selection mask length must equal the number of devices")
    nxt = np.where(psi, 0.0, state.paoi) + completion_time
    return AoIState(paoi=nxt, weights=state.weights, round_index=state.round_index + 1)


def device_priority(q, paoi, total_time):
    total_time = np.asarray(total_time, dtype=float)
    if np.any(total_time <= 0):
        raise ValueError("total time must be > 0")
    out = np.asarray(q, dtype=float) * np.asarray(paoi, dtype=float) / total_time
    return float(out) if out.ndim == 0 else out


def lyapunov_value(state: AoIState) -> float:
    return float(np.sum(state.weights * state.paoi**2) / state.n_devices)


def lyapunov_drift(state_t: AoIState, state_t1: AoIState) -> float:
    if state_t.paoi.shape != state_t1.paoi.shape:
        raise ValueError("states must cover the same devices")
    return lyapunov_value(state_t1) - lyapunov_value(state_t)


def ws_paoi(q, next_paoi) -> float:
    q = np.asarray(q, dtype=float)
    return float(np.sum(q * np.asarray(next_paoi, dtype=float)) / q.size)


def priority_order(priorities) -> np.ndarray:
    """Indices by descending priority, ties by ascending index."""
    p = np.asarray(priorities, dtype=float)
    return np.lexsort((np.arange(p.size), -p))


def staircase_psi(k: int, priorities, total_times) -> float:
    """Completion time if the ``k`` highest-priority devices are selected."""
    total_times = np.asarray(total_times, dtype=float)
    n = total_times.size
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, N]")
    order = priority_order(priorities)
    return float(total_times[order[:k]].max())


def _candidate(prefix: Sequence[int], t_max: float, total_times, q, paoi):
    n = total_times.size
    in_prefix = np.zeros(n, dtype=bool)
    in_prefix[list(prefix)] = True
    v = ~in_prefix & (total_times <= t_max)
    w = ~in_prefix & ~v
    r = t_max / n + float(np.sum(q[w] * paoi[w])) / n
    return np.flatnonzero(in_prefix | v), r


def greedy_select(priorities, total_times, q, paoi) -> SelectionDecision:
    """Greedy priority-aware device selection.

    Walks devices in priority order and evaluates the next-round WS-PAoI
    only where admitting the next device would raise the round's completion
    time. Each candidate set is the priority prefix plus every device that
    finishes no later than the prefix (those cost nothing in time). The
    candidate with the smallest predicted WS-PAoI wins; ties keep the
    earlier (smaller) prefix.
    """
    total_times = np.asarray(total_times, dtype=float)
    q = np.asarray(q, dtype=float)
    paoi = np.asarray(paoi, dtype=float)
    n = total_times.size
    if n < 1:
        raise ValueError("need at least one device")
    if np.any(total_times <= 0):
        raise ValueError("total times must be > 0")

    order = priority_order(priorities)
    prefix = [int(order[0])]
    t_max = total_times[order[0]]
    best = None
    for j in range(1, n):
        dev = int(order[j])
        if t_max < total_times[dev]:
            sel, r = _candidate(prefix, t_max, total_times, q, paoi)
            if best is None or r < best[2]:
                best = (len(prefix), sel, r, t_max)
            t_max = total_times[dev]
        prefix.append(dev)
    r_all = t_max / n
    if best is None or r_all < best[2]:
        best = (n, np.arange(n), r_all, t_max)
    k, sel, r, tc = best
    return SelectionDecision(
        selected=np.asarray(sel, dtype=int),
        k_opt=int(k),
        predicted_ws_paoi=float(r),
        completion_time=float(tc),
    )


def ews_paoi(paoi_trajectory, q) -> float:
    """Weighted PAoI averaged over devices and recorded rounds.

    ``paoi_trajectory`` has shape (rounds, devices).
    """
    a = np.atleast_2d(np.asarray(paoi_trajectory, dtype=float))
    q = np.asarray(q, dtype=float)
    if a.shape[0] < 1:
        raise ValueError("need at least one recorded round")
    return float(np.sum(a * q) / (a.shape[0] * a.shape[1]))


def ews_paoi_trajectory(paoi_trajectory, q) -> np.ndarray:
    """Running value of :func:`ews_paoi` after each recorded round."""
    a = np.atleast_2d(np.asarray(paoi_trajectory, dtype=float))
    per_round = (a * np.asarray(q, dtype=float)).sum(axis=1) / a.shape[1]
    return np.cumsum(per_round) / np.arange(1, a.shape[0] + 1)
