import numpy as np
import pytest

from airsched.baselines import (
    AllDeactivatedError,
    channel_inversion_horizon,
    channel_inversion_plan,
    fedavg_select,
    full_power_plan,
    hybridfl_select,
)
from airsched.power import alternating_optimize, instantaneous_mse, time_average_mse


def test_full_power_alpha():
    plan = full_power_plan(np.ones((4, 3)), 1.0, 3.0, 0.1)
    assert np.allclose(plan.alpha, 1 / 3)


def test_full_power_not_better_than_optimizer(rng):
    for _ in range(10):
        g = rng.exponential(1, (6, 4))
        fp = full_power_plan(g, 1.0, 3.0, 0.1)
        opt = alternating_optimize(g, 3.0, 1.0, 0.1)
        assert time_average_mse(opt, g, 3.0, 0.1) <= time_average_mse(fp, g, 3.0, 0.1) + 1e-12


def test_full_power_zero_noise_misaligned():
    plan = full_power_plan([[1.0, 4.0]], 1.0, 1.0, 0.0)
    mis, _ = instantaneous_mse(plan.alpha, plan.eta, [[1.0, 4.0]], [1.0, 1.0], 0.0)
    assert mis[0] > 0


def test_channel_inversion():
    eta, pmax = 1.0, 2.0
    alpha, active = channel_inversion_plan([eta / pmax * 2, 1e-9, 5.0], eta, pmax)
    assert alpha[0] == pytest.approx(0.5) and active[0]
    assert not active[1] and alpha[1] == 0
    g = np.array([eta / pmax * 2, 1e-9, 5.0])
    mis = (np.sqrt(alpha * pmax * g / eta) - 1) ** 2
    assert np.allclose(mis[active], 0)
    with pytest.raises(AllDeactivatedError):
        channel_inversion_plan([1e-9, 1e-9], 1.0, 1.0)


def test_channel_inversion_horizon_skips_dead_rounds():
    g = np.array([[1.0, 2.0], [1e-12, 1e-12]])
    plan, active = channel_inversion_horizon(g, 1.0, 3.0, 0.1, np.ones_like(g, bool))
    assert active[0].any() and not active[1].any()
    assert np.all(plan.alpha[1] == 0)


def test_fedavg_select():
    rng = np.random.default_rng(0)
    assert list(fedavg_select(5, 5, rng)) == [0, 1, 2, 3, 4]
    counts = np.zeros(10)
    for _ in range(10**4):
        counts[fedavg_select(10, 3, rng)] += 1
    assert np.all(np.abs(counts / 10**4 - 0.3) <= 0.02)
    a = fedavg_select(10, 4, np.random.default_rng(9))
    b = fedavg_select(10, 4, np.random.default_rng(9))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        fedavg_select(3, 4, rng)


def test_hybridfl_select():
    t = np.array([1.0, 2.0, 3.0, 50.0])
    a = hybridfl_select(4, 2, np.inf, t, np.random.default_rng(4))
    b = fedavg_select(4, 2, np.random.default_rng(4))
    assert np.array_equal(a, b)
    assert hybridfl_select(4, 3, 0.5, t, np.random.default_rng(0)).size == 0
    rng = np.random.default_rng(1)
    counts = np.zeros(4)
    for _ in range(2000):
        counts[hybridfl_select(4, 2, 10.0, t, rng)] += 1
    assert counts[3] < counts[:3].min()
