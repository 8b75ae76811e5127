"""Experiment orchestration: environment construction, scheduling, power
planning, training, metrics and file output.

A run is a pure function of (config, policy, replication, SNR). Randomness
comes from independent streams keyed by ``(master_seed, replication, stream,
...)`` so every policy sees the same channels, CPU shares and data.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from airsched import aircomp, baselines, fl, power, scheduler, timing
from airsched.baselines import Policy
from airsched.channel import ChannelParams, noise_variance_from_snr, realize_round
from airsched.config import ExperimentConfig
from airsched.diagnostics import BoundParams, convergence_bound

log = logging.getLogger(__name__)

STREAM_DATA = 1
STREAM_CHANNEL = 2
STREAM_TAU = 3
STREAM_SELECTION = 4
STREAM_NOISE = 5
STREAM_SGD = 6


def stream(master_seed: int, replication: int, stream_id: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), int(replication), stream_id, *map(int, keys)])


@dataclass
class Environment:
    """Everything exogenous to the policy for one replication."""

    model: fl.SoftmaxRegression
    datasets: list
    q: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    cpu_hz: np.ndarray
    channel_params: ChannelParams
    pbar: np.ndarray
    pmax: np.ndarray
    coefficients: np.ndarray  # (T, N) complex
    tau: np.ndarray  # (T, N)
    total_times: np.ndarray  # (T, N)
    comm_time: float

    @property
    def gains(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    @property
    def n_devices(self) -> int:
        return self.q.size

    @property
    def rounds(self) -> int:
        return self.total_times.shape[0]


def _per_device(value, n, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} needs one value per device")
    return arr


def build_environment(cfg: ExperimentConfig, replication: int = 0) -> Environment:
    n, T, seed = cfg.n_devices, cfg.rounds, cfg.master_seed
    d = cfg.data
    data_rng = stream(seed, replication, STREAM_DATA)
    if d.source == "synthetic":
        X, y = fl.make_gaussian_clusters(d.n_samples, d.n_features, d.n_classes, d.separation, data_rng)
    else:
        X, y = fl.load_columnar(d.path)
    perm = data_rng.permutation(len(y))
    n_test = max(1, int(round(d.test_fraction * len(y))))
    test, train = perm[:n_test], perm[n_test:]
    counts = [d.classes_per_device[i % len(d.classes_per_device)] for i in range(n)]
    datasets, q = fl.partition_noniid(X[train], y[train], n, counts, data_rng)
    model = fl.SoftmaxRegression(X.shape[1], int(y.max()) + 1)

    tm = cfg.timing
    cpu = timing.cpu_profile(n, tm.cpu_hz, tm.cpu_spread)
    comm = timing.communication_time(timing.CommProfile(tm.model_size, tm.bandwidth))
    sizes = np.array([len(ds) for ds in datasets])

    ch = cfg.channel
    params = ChannelParams(
        distances=_per_device(ch.distances, n, "channel.distances"),
        frequency_correlation=ch.frequency_correlation,
        path_loss_exponent=ch.path_loss_exponent,
        noise_scale=ch.noise_scale,
    )
    coeffs = np.empty((T, n), dtype=complex)
    tau = np.empty((T, n))
    for t in range(T):
        coeffs[t] = realize_round(params, n, t, stream(seed, replication, STREAM_CHANNEL, t)).coefficients
        tau[t] = timing.draw_tau(stream(seed, replication, STREAM_TAU, t), n, tm.tau_min)
    comp = timing.computation_times(tm.cycles_per_sample, sizes, cpu, tau)
    pbar = np.full(n, cfg.power.pbar)
    return Environment(
        model=model,
        datasets=datasets,
        q=q,
        X_test=X[test],
        y_test=y[test],
        cpu_hz=cpu,
        channel_params=params,
        pbar=pbar,
        pmax=cfg.power.pmax_ratio * pbar,
        coefficients=coeffs,
        tau=tau,
        total_times=timing.total_time(comp, comm),
        comm_time=comm,
    )


@dataclass
class Schedule:
    selected: np.ndarray  # (T, N) bool
    k_opt: np.ndarray  # (T,)
    completion: np.ndarray  # (T,)
    paoi: np.ndarray  # (T, N) PAoI at the start of each round
    predicted_ws: np.ndarray  # (T,) WS-PAoI after the round
    skipped: np.ndarray  # (T,) bool: nobody aggregated
    final_paoi: np.ndarray

    @property
    def participation(self) -> np.ndarray:
        return self.selected.sum(axis=1)


def run_schedule(env: Environment, policy: Policy, cfg: ExperimentConfig, replication: int = 0,
                 k_fixed: int | None = None) -> Schedule:
    policy = Policy(policy)
    n, T = env.n_devices, env.rounds
    state = scheduler.AoIState.initial(env.q)
    selected = np.zeros((T, n), dtype=bool)
    k_opt = np.zeros(T, dtype=int)
    completion = np.zeros(T)
    paoi = np.zeros((T, n))
    predicted = np.zeros(T)
    skipped = np.zeros(T, dtype=bool)
    for t in range(T):
        times = env.total_times[t]
        paoi[t] = state.paoi
        if policy in (Policy.FEDAVG, Policy.HYBRIDFL):
            rng = stream(cfg.master_seed, replication, STREAM_SELECTION, t)
            if policy is Policy.FEDAVG:
                chosen = baselines.fedavg_select(n, k_fixed, rng)
                deadline = None
            else:
                deadline = cfg.baselines.deadline or float(np.median(times))
                chosen = baselines.hybridfl_select(n, k_fixed, deadline, times, rng)
            mask = np.zeros(n, dtype=bool)
            mask[chosen] = True
            k_opt[t] = chosen.size
            if chosen.size:
                tc = timing.completion_time(times, mask)
            else:
                # server waited out the deadline with nothing to aggregate
                tc = deadline
                skipped[t] = True
        else:
            prio = scheduler.device_priority(state.weights, state.paoi, times)
            dec = scheduler.greedy_select(prio, times, state.weights, state.paoi)
            mask = dec.mask(n)
            k_opt[t] = dec.k_opt
            tc = dec.completion_time
        selected[t] = mask
        completion[t] = tc
        state = scheduler.update_paoi(state, mask, tc)
        predicted[t] = scheduler.ws_paoi(state.weights, state.paoi)
    return Schedule(selected, k_opt, completion, paoi, predicted, skipped, state.paoi)


@dataclass
class PowerResult:
    alpha: np.ndarray  # (T, N)
    eta: np.ndarray  # (T,), nan where skipped
    transmit: np.ndarray  # (T, N) devices whose signal is aggregated
    misalignment: np.ndarray  # (T,) over the selected set
    noise: np.ndarray
    iterations: int = 0

    @property
    def mse(self) -> np.ndarray:
        return self.misalignment + self.noise

    def time_average_mse(self) -> float:
        m = self.mse[np.isfinite(self.mse)]
        return float(m.mean()) if m.size else float("nan")


def aligned_plan(gains, pmax, mask):
    """Exact amplitude alignment at the largest common target every device can reach."""
    alpha = np.zeros_like(gains)
    eta = np.full(gains.shape[0], np.nan)
    for t in range(gains.shape[0]):
        m = mask[t]
        if m.any():
            eta[t] = np.min(pmax[m] * gains[t, m])
            alpha[t, m] = eta[t] / (pmax[m] * gains[t, m])
    return np.minimum(alpha, 1.0), eta


def plan_power(env: Environment, schedule: Schedule, policy: Policy, cfg: ExperimentConfig,
               sigma2: float) -> PowerResult:
    policy = Policy(policy)
    gains, sel = env.gains, schedule.selected
    rows = sel.any(axis=1)
    T = env.rounds
    alpha = np.zeros_like(gains)
    eta = np.full(T, np.nan)
    transmit = sel.copy()
    iterations = 0
    pc = cfg.power
    if pc.mode == "aligned":
        alpha, eta = aligned_plan(gains, env.pmax, sel)
    elif not rows.any():
        pass  # nothing was ever aggregated
    elif policy is Policy.FULL_POWER:
        plan = baselines.full_power_plan(gains[rows], env.pbar, env.pmax, sigma2, sel[rows])
        alpha[rows], eta[rows] = plan.alpha, plan.eta
    elif policy is Policy.CHANNEL_INVERSION:
        plan, active = baselines.channel_inversion_horizon(gains[rows], env.pbar, env.pmax, sigma2, sel[rows])
        alpha[rows], eta[rows] = plan.alpha, plan.eta
        transmit[rows] = active
    elif pc.mode == "online":
        plan = power.online_optimize(gains[rows], env.pmax, env.pbar, sigma2, sel[rows], step=pc.online_step)
        alpha[rows], eta[rows] = plan.alpha, plan.eta
        iterations = plan.iterations
    else:
        plan = power.alternating_optimize(
            gains[rows], env.pmax, env.pbar, sigma2, pc.epsilon0,
            mask=sel[rows], horizon=T, max_iter=pc.max_iter,
        )
        alpha[rows], eta[rows] = plan.alpha, plan.eta
        iterations = plan.iterations
    mis = np.full(T, np.nan)
    noise = np.full(T, np.nan)
    if rows.any():
        # deactivated devices stay in the selected set and count with alpha = 0
        m, nz = power.instantaneous_mse(alpha[rows], eta[rows], gains[rows], env.pmax, sigma2, sel[rows])
        mis[rows], noise[rows] = m, nz
    return PowerResult(alpha, eta, transmit, mis, noise, iterations)


@dataclass
class RoundOutcome:
    w: np.ndarray
    aggregated: bool
    error_sq: float = 0.0
    weighting_bias: float = 0.0


def run_round(w, t: int, env: Environment, transmit_mask, alpha_t, eta_t, sigma2: float,
              train: fl.TrainConfig, master_seed: int, replication: int) -> RoundOutcome:
    """Local training on the transmitting devices, over-the-air aggregation
    and the global step for round ``t``."""
    devices = np.flatnonzero(transmit_mask)
    if devices.size == 0:
        return RoundOutcome(w=w, aggregated=False)
    thetas = np.empty((devices.size, w.size))
    for i, n in enumerate(devices):
        rng = stream(master_seed, replication, STREAM_SGD, t, n)
        _, thetas[i] = fl.local_sgd(env.model, w, env.datasets[n], train, rng)
    noise_rng = stream(master_seed, replication, STREAM_NOISE, t)
    res, _ = aircomp.aircomp_round(
        thetas, env.q[devices], env.n_devices, alpha_t[devices], env.pmax[devices],
        env.coefficients[t, devices], eta_t, sigma2, noise_rng,
    )
    w_next = fl.global_update(w, res.theta_hat, train.learning_rate)
    return RoundOutcome(
        w=w_next,
        aggregated=True,
        error_sq=float(res.error @ res.error),
        weighting_bias=aircomp.weighting_bias(thetas, env.q[devices], env.n_devices),
    )


@dataclass
class RunResult:
    policy: str
    replication: int
    snr_db: float
    sigma2: float
    k_fixed: int | None
    schedule: Schedule
    power: PowerResult
    env: Environment = field(repr=False)
    loss: np.ndarray | None = None
    accuracy: np.ndarray | None = None
    error_sq: np.ndarray | None = None
    weights: np.ndarray | None = None


def default_k_fixed(env: Environment, cfg: ExperimentConfig, replication: int) -> int:
    if cfg.baselines.k_fixed is not None:
        return int(cfg.baselines.k_fixed)
    ref = run_schedule(env, Policy.FEDAIRAOI, cfg, replication)
    return int(min(env.n_devices, max(1, round(float(ref.k_opt.mean())))))


def simulate(cfg: ExperimentConfig, policy, replication: int = 0, snr_db: float | None = None,
             train: bool | None = None, env: Environment | None = None) -> RunResult:
    policy = Policy(policy)
    snr_db = float(cfg.snr_db[0] if snr_db is None else snr_db)
    env = build_environment(cfg, replication) if env is None else env
    k_fixed = None
    if policy in (Policy.FEDAVG, Policy.HYBRIDFL):
        k_fixed = default_k_fixed(env, cfg, replication)
    sched = run_schedule(env, policy, cfg, replication, k_fixed)
    sigma2 = 0.0 if math.isinf(snr_db) else noise_variance_from_snr(cfg.power.pbar, snr_db)
    pw = plan_power(env, sched, policy, cfg, sigma2)
    result = RunResult(policy.value, replication, snr_db, sigma2, k_fixed, sched, pw, env)
    if cfg.train.enabled if train is None else train:
        _train(result, cfg)
    return result


def _train(result: RunResult, cfg: ExperimentConfig) -> None:
    env, pw = result.env, result.power
    tc = fl.TrainConfig(cfg.train.learning_rate, cfg.train.local_iterations, cfg.train.batch_size, cfg.rounds)
    w = env.model.init()
    T = env.rounds
    loss, acc, err = np.empty(T), np.empty(T), np.full(T, np.nan)
    for t in range(T):
        out = run_round(w, t, env, pw.transmit[t], pw.alpha[t], pw.eta[t], result.sigma2, tc,
                        cfg.master_seed, result.replication)
        w = out.w
        if out.aggregated:
            err[t] = out.error_sq
        loss[t] = fl.global_loss(env.model, w, env.datasets, env.q)
        acc[t] = env.model.accuracy(w, env.X_test, env.y_test)
    result.loss, result.accuracy, result.error_sq, result.weights = loss, acc, err, w


# ---------------------------------------------------------------- metrics


def metrics_report(result: RunResult) -> dict:
    s, env = result.schedule, result.env
    freq = s.selected.mean(axis=0)
    rep = {
        "policy": result.policy,
        "replication": result.replication,
        "snr_db": result.snr_db,
        "k_fixed": result.k_fixed,
        "time_average_mse": result.power.time_average_mse(),
        "average_completion_time": float(s.completion.mean()),
        "mean_participation": float(s.participation.mean()),
        "mean_k_opt": float(s.k_opt.mean()),
        "skipped_rounds": int(s.skipped.sum()),
        "selection_frequency": freq.tolist(),
        "min_selection_frequency": float(freq.min()),
        "ews_paoi": scheduler.ews_paoi(s.paoi, env.q),
        "ews_paoi_trajectory": scheduler.ews_paoi_trajectory(s.paoi, env.q).tolist(),
        "power_iterations": result.power.iterations,
    }
    if result.loss is not None:
        rep["loss"] = result.loss.tolist()
        rep["accuracy"] = result.accuracy.tolist()
        rep["final_loss"] = float(result.loss[-1])
        rep["final_accuracy"] = float(result.accuracy[-1])
    return rep


def relative_completion_times(reports: list[dict], reference: str = Policy.FEDAVG.value) -> dict:
    """Average completion time of each policy divided by the reference policy's."""
    by = {}
    for r in reports:
        by.setdefault(r["policy"], []).append(r["average_completion_time"])
    if reference not in by:
        return {}
    ref = float(np.mean(by[reference]))
    return {p: float(np.mean(v)) / ref for p, v in by.items()}


def audit(result: RunResult, tol: float = 1e-9) -> bool:
    """Recompute every stored MSE from the stored plan and channels."""
    pw, s, env = result.power, result.schedule, result.env
    rows = s.selected.any(axis=1)
    if not rows.any():
        return True
    mis, noise = power.instantaneous_mse(
        pw.alpha[rows], pw.eta[rows], env.gains[rows], env.pmax, result.sigma2, s.selected[rows]
    )
    ref = mis + noise
    return bool(np.allclose(pw.mse[rows], ref, rtol=tol, atol=tol))


def bound_report(result: RunResult, cfg: ExperimentConfig, constants: dict | None = None) -> dict:
    """Convergence-bound breakdown for a run, with placeholder unit constants
    unless ``constants`` supplies them."""
    c = {"smoothness": 1.0, "grad_noise": 1.0, "heterogeneity": 1.0, "element_variance": 1.0,
         "grad_norm": 1.0, "initial_gap": 1.0}
    c.update(constants or {})
    mse = result.power.mse
    k = int(round(float(result.schedule.participation.mean()))) or 1
    params = BoundParams(
        dim=result.env.model.dim,
        n_devices=result.env.n_devices,
        n_selected=min(max(k, 1), result.env.n_devices),
        rounds=result.env.rounds,
        learning_rate=cfg.train.learning_rate,
        local_iters=cfg.train.local_iterations,
        mse_trace=tuple(mse[np.isfinite(mse)]),
        weight_skew=float(result.env.n_devices * result.env.q.max()),
        **c,
    )
    out = convergence_bound(params, rescale=True)
    out["constants"] = c
    return out


# ---------------------------------------------------------------- sweeps


def sweep_snr(cfg: ExperimentConfig, policies=None) -> list[dict]:
    """Time-average MSE per (SNR, policy): mean and standard error over replications."""
    policies = [Policy(p) for p in (policies or cfg.policies)]
    cells: dict[tuple, list] = {}
    for rep in range(cfg.replications):
        env = build_environment(cfg, rep)
        for snr in cfg.snr_db:
            for pol in policies:
                r = simulate(cfg, pol, rep, snr, train=False, env=env)
                cells.setdefault((float(snr), pol.value), []).append(r.power.time_average_mse())
    rows = []
    for snr in cfg.snr_db:
        for pol in policies:
            v = np.asarray(cells[(float(snr), pol.value)])
            se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
            rows.append({"snr_db": float(snr), "policy": pol.value, "mse_mean": float(v.mean()),
                         "mse_stderr": se, "replications": int(v.size)})
    return rows


def compare(cfg: ExperimentConfig, policies=None, train: bool | None = None) -> dict:
    """Paired-seed comparison of policies at the first configured SNR."""
    policies = [Policy(p) for p in (policies or cfg.policies)]
    reports = []
    for rep in range(cfg.replications):
        env = build_environment(cfg, rep)
        for pol in policies:
            reports.append(metrics_report(simulate(cfg, pol, rep, train=train, env=env)))
    rel = relative_completion_times(reports)
    summary = []
    for pol in policies:
        rs = [r for r in reports if r["policy"] == pol.value]
        freq = np.mean([r["selection_frequency"] for r in rs], axis=0)
        traj = np.mean([r["ews_paoi_trajectory"] for r in rs], axis=0)
        row = {
            "policy": pol.value,
            "time_average_mse": float(np.mean([r["time_average_mse"] for r in rs])),
            "average_completion_time": float(np.mean([r["average_completion_time"] for r in rs])),
            "relative_completion_time": rel.get(pol.value, float("nan")),
            "mean_participation": float(np.mean([r["mean_participation"] for r in rs])),
            "min_selection_frequency": float(freq.min()),
            "final_ews_paoi": float(traj[-1]),
            "selection_frequency": freq.tolist(),
            "ews_paoi_trajectory": traj.tolist(),
        }
        if "final_loss" in rs[0]:
            row["final_loss"] = float(np.mean([r["final_loss"] for r in rs]))
            row["final_accuracy"] = float(np.mean([r["final_accuracy"] for r in rs]))
        summary.append(row)
    return {"policies": summary, "runs": reports}


def trajectory_slope(values, fraction: float = 0.25) -> float:
    """Least-squares slope over the last ``fraction`` of a trajectory."""
    v = np.asarray(values, float)
    k = max(2, int(round(fraction * v.size)))
    x = np.arange(v.size - k, v.size, dtype=float)
    return float(np.polyfit(x, v[-k:], 1)[0])


# ---------------------------------------------------------------- output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_fmt(row[c]) for c in columns])


ROUND_COLUMNS = [
    "policy", "replication", "snr_db", "round", "k_opt", "n_selected", "n_transmitting", "selected",
    "completion_time", "ws_paoi", "ews_paoi", "misalignment", "noise", "mse", "eta", "error_sq",
    "global_loss", "test_accuracy",
]
DEVICE_COLUMNS = ["policy", "replication", "round", "device", "paoi", "selected", "transmitting",
                  "gain", "alpha"]
SWEEP_COLUMNS = ["snr_db", "policy", "mse_mean", "mse_stderr", "replications"]
COMPARE_COLUMNS = ["policy", "time_average_mse", "average_completion_time", "relative_completion_time",
                   "mean_participation", "min_selection_frequency", "final_ews_paoi"]


def round_rows(result: RunResult) -> list[dict]:
    s, pw, env = result.schedule, result.power, result.env
    ews = scheduler.ews_paoi_trajectory(s.paoi, env.q)
    nan = float("nan")
    rows = []
    for t in range(env.rounds):
        rows.append({
            "policy": result.policy,
            "replication": result.replication,
            "snr_db": result.snr_db,
            "round": t,
            "k_opt": int(s.k_opt[t]),
            "n_selected": int(s.selected[t].sum()),
            "n_transmitting": int(pw.transmit[t].sum()),
            "selected": ";".join(map(str, np.flatnonzero(s.selected[t]))),
            "completion_time": s.completion[t],
            "ws_paoi": s.predicted_ws[t],
            "ews_paoi": ews[t],
            "misalignment": pw.misalignment[t],
            "noise": pw.noise[t],
            "mse": pw.mse[t],
            "eta": pw.eta[t],
            "error_sq": nan if result.error_sq is None else result.error_sq[t],
            "global_loss": nan if result.loss is None else result.loss[t],
            "test_accuracy": nan if result.accuracy is None else result.accuracy[t],
        })
    return rows


def device_rows(result: RunResult) -> list[dict]:
    s, pw, env = result.schedule, result.power, result.env
    gains = env.gains
    rows = []
    for t in range(env.rounds):
        for n in range(env.n_devices):
            rows.append({
                "policy": result.policy, "replication": result.replication, "round": t, "device": n,
                "paoi": s.paoi[t, n], "selected": bool(s.selected[t, n]),
                "transmitting": bool(pw.transmit[t, n]), "gain": gains[t, n], "alpha": pw.alpha[t, n],
            })
    return rows


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir, policy=None) -> dict:
    """Single-policy run over all replications; writes rounds.csv, devices.csv, summary.json."""
    policy = Policy(policy or cfg.policy)
    out_dir = Path(out_dir)
    rrows, drows, reports, bounds = [], [], [], []
    for rep in range(cfg.replications):
        res = simulate(cfg, policy, rep)
        if not audit(res):
            raise RuntimeError("stored MSE values are not reproducible from the plan")
        rrows += round_rows(res)
        drows += device_rows(res)
        reports.append(metrics_report(res))
        bounds.append(bound_report(res, cfg))
    write_csv(out_dir / "rounds.csv", rrows, ROUND_COLUMNS)
    write_csv(out_dir / "devices.csv", drows, DEVICE_COLUMNS)
    summary = {"config": cfg.to_dict(), "policy": policy.value, "reports": reports, "bound": bounds}
    write_json(out_dir / "summary.json", summary)
    return summary


def run_sweep(cfg: ExperimentConfig, out_dir, policies=None) -> list[dict]:
    rows = sweep_snr(cfg, policies)
    write_csv(Path(out_dir) / "sweep.csv", rows, SWEEP_COLUMNS)
    write_json(Path(out_dir) / "summary.json", {"config": cfg.to_dict(), "sweep": rows})
    return rows


def run_compare(cfg: ExperimentConfig, out_dir, policies=None) -> dict:
    res = compare(cfg, policies)
    out_dir = Path(out_dir)
    write_csv(out_dir / "compare.csv", res["policies"], COMPARE_COLUMNS)
    freq_rows = [{"policy": p["policy"], "device": n, "selection_frequency": f}
                 for p in res["policies"] for n, f in enumerate(p["selection_frequency"])]
    write_csv(out_dir / "selection_frequency.csv", freq_rows, ["policy", "device", "selection_frequency"])
    ews_rows = [{"policy": p["policy"], "round": t, "ews_paoi": v}
                for p in res["policies"] for t, v in enumerate(p["ews_paoi_trajectory"])]
    write_csv(out_dir / "ews_paoi.csv", ews_rows, ["policy", "round", "ews_paoi"])
    write_json(out_dir / "summary.json", {"config": cfg.to_dict(), "policies": res["policies"]})
    return res
