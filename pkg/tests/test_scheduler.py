import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airsched.scheduler import (
    AoIState,
    device_priority,
    ews_paoi,
    ews_paoi_trajectory,
    greedy_select,
    lyapunov_drift,
    lyapunov_value,
    priority_order,
    staircase_psi,
    update_paoi,
    weights_from_class_counts,
    ws_paoi,
)


def state(a, q):
    return AoIState(paoi=np.asarray(a, float), weights=np.asarray(q, float))


def test_update_paoi_examples():
    assert update_paoi(state([5], [1]), [0], 2).paoi[0] == 7
    assert update_paoi(state([5], [1]), [1], 2).paoi[0] == 2
    assert np.array_equal(update_paoi(state([1, 4], [0.5, 0.5]), [1, 0], 3).paoi, [3, 7])


def test_update_paoi_rejects_bad_input():
    with pytest.raises(ValueError):
        update_paoi(state([1, 1], [0.5, 0.5]), [1, 0], -1)
    with pytest.raises(ValueError):
        update_paoi(state([1, 1], [0.5, 0.5]), [1], 1)


def test_aoistate_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        state([0, 0], [1.0, 1.0])


def test_priority():
    assert device_priority(0.1, 10, 2) == pytest.approx(0.5)
    assert device_priority(0.1, 0, 2) == 0
    assert device_priority(0.1, 10, 4) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        device_priority(0.1, 10, 0)


def test_lyapunov():
    s = state([2, 4], [0.5, 0.5])
    assert lyapunov_value(s) == pytest.approx(5)
    assert lyapunov_value(state([0, 0], [0.5, 0.5])) == 0
    assert lyapunov_value(state([6, 12], [0.5, 0.5])) == pytest.approx(45)
    zero = state([0, 0], [0.5, 0.5])
    assert lyapunov_drift(s, zero) == pytest.approx(-5)
    assert lyapunov_drift(s, s) == 0
    assert lyapunov_drift(zero, s) == -lyapunov_drift(s, zero)


def test_ws_paoi_examples():
    q = np.array([0.5, 0.5])
    nxt = update_paoi(state([1, 4], q), [1, 1], 4).paoi
    assert ws_paoi(q, nxt) == pytest.approx(2)
    nxt = update_paoi(state([1, 4], q), [1, 0], 3).paoi
    assert ws_paoi(q, nxt) == pytest.approx(2.5)


def test_weights_from_class_counts():
    assert np.allclose(weights_from_class_counts([1, 2]), [1 / 3, 2 / 3])


def test_staircase_examples():
    p, t = [0.3, 0.9, 0.1], [4.0, 2.0, 7.0]
    assert staircase_psi(1, p, t) == 2.0
    assert staircase_psi(3, p, t) == 7.0
    with pytest.raises(ValueError):
        staircase_psi(0, p, t)


def test_priority_ties_by_index():
    assert list(priority_order([1.0, 2.0, 1.0, 2.0])) == [1, 3, 0, 2]


def test_priority_order_scale_invariant(rng):
    p = rng.random(10)
    assert np.array_equal(priority_order(p), priority_order(3.7 * p))


def test_single_device():
    d = greedy_select([0.0], [2.5], [1.0], [0.0])
    assert list(d.selected) == [0] and d.k_opt == 1
    assert d.predicted_ws_paoi == pytest.approx(2.5)


def test_straggler_excluded():
    q = np.full(3, 1 / 3)
    a = np.array([10, 10, 0.1])
    t = np.array([1.0, 1.0, 100.0])
    d = greedy_select(device_priority(q, a, t), t, q, a)
    assert list(d.selected) == [0, 1]
    # straggler sits in W and contributes q A / N
    assert d.predicted_ws_paoi == pytest.approx(1 / 3 + (1 / 3) * 0.1 / 3)
    assert d.completion_time == 1.0


def brute_force(priorities, t, q, a):
    """Every priority prefix, each augmented with the devices that finish
    no later than the prefix; the minimum predicted WS-PAoI over them."""
    n = len(t)
    order = sorted(range(n), key=lambda i: (-priorities[i], i))
    best = np.inf
    for k in range(1, n + 1):
        pre = set(order[:k])
        tmax = max(t[i] for i in pre)
        sel = pre | {i for i in range(n) if t[i] <= tmax}
        r = tmax / n + sum(q[i] * a[i] for i in range(n) if i not in sel) / n
        best = min(best, r)
    return best


def random_instance(rng, n):
    q = rng.random(n) + 0.01
    q /= q.sum()
    a = rng.exponential(5.0, n) * (rng.random(n) < 0.8)
    t = rng.uniform(0.5, 20.0, n)
    if rng.random() < 0.3:
        t = np.round(t)  # equal times exercise the tie handling
    return q, a, t


def test_greedy_matches_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        n = int(rng.integers(1, 9))
        q, a, t = random_instance(rng, n)
        p = device_priority(q, a, t)
        d = greedy_select(p, t, q, a)
        assert d.predicted_ws_paoi == pytest.approx(brute_force(p, t, q, a), rel=1e-12, abs=1e-12)


def test_greedy_decision_consistent(rng):
    for _ in range(200):
        n = int(rng.integers(1, 12))
        q, a, t = random_instance(rng, n)
        d = greedy_select(device_priority(q, a, t), t, q, a)
        mask = d.mask(n)
        assert d.k_opt <= len(d.selected) <= n
        assert d.completion_time == t[mask].max()
        nxt = update_paoi(state(a, q), mask, d.completion_time).paoi
        assert ws_paoi(q, nxt) == pytest.approx(d.predicted_ws_paoi, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 10), min_size=n, max_size=n),
    st.lists(st.floats(0.01, 100), min_size=n, max_size=n),
)))
def test_staircase_non_decreasing(data):
    p, t = data
    vals = [staircase_psi(k, p, t) for k in range(1, len(t) + 1)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_v_augmentation_keeps_completion_time(rng):
    # devices added because they finish no later than the prefix never stretch the round
    for _ in range(100):
        n = int(rng.integers(2, 10))
        q, a, t = random_instance(rng, n)
        p = device_priority(q, a, t)
        d = greedy_select(p, t, q, a)
        order = priority_order(p)
        assert d.completion_time == staircase_psi(d.k_opt, p, t)
        assert set(order[: d.k_opt]) <= set(d.selected)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=8), st.floats(0, 50), st.integers(0, 2**31))
def test_paoi_recursion_values(mask, tc, seed):
    n = len(mask)
    a = np.random.default_rng(seed).exponential(3, n)
    nxt = update_paoi(state(a, np.full(n, 1 / n)), mask, tc).paoi
    diff = nxt - tc
    expect = np.where(mask, 0.0, a)
    assert np.allclose(diff, expect, rtol=0, atol=1e-9)


def test_ews_paoi():
    q = np.array([0.5, 0.5])
    traj = np.array([[1.0, 4.0]])
    assert ews_paoi(traj, q) == pytest.approx((0.5 + 2.0) / 2)
    assert ews_paoi(np.zeros((5, 3)), np.full(3, 1 / 3)) == 0
    run = ews_paoi_trajectory(np.array([[0, 0], [2, 2], [4, 4]], float), q)
    assert np.allclose(run, [0, 0.5, 1.0])


def test_exhaustive_set_search_never_beats_v_augmented_family_on_monotone_instances():
    # with equal priority and equal q the family contains the best subset of each size
    n = 5
    q = np.full(n, 1 / n)
    a = np.full(n, 3.0)
    t = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    d = greedy_select(device_priority(q, a, t), t, q, a)
    best = np.inf
    for r in range(1, n + 1):
        for s in itertools.combinations(range(n), r):
            tc = t[list(s)].max()
            rest = [i for i in range(n) if i not in s]
            best = min(best, tc / n + sum(q[i] * a[i] for i in rest) / n)
    assert d.predicted_ws_paoi == pytest.approx(best)
