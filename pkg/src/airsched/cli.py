"""Command-line entry point: ``airsched {run,sweep,compare,bound}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from airsched import config, harness
from airsched.baselines import Policy
from airsched.config import ConfigError
from airsched.diagnostics import BoundParams, convergence_bound


def _common(p: argparse.ArgumentParser, seed_required: bool = False) -> None:
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. power.mode=online (repeatable)")
    p.add_argument("--seed", type=int, required=seed_required, help="master seed")
    p.add_argument("--rounds", type=int)
    p.add_argument("--devices", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--snr", type=float, nargs="+", metavar="DB")
    p.add_argument("--no-train", action="store_true", help="skip model training")
    p.add_argument("--out", default="out", help="output directory")


def _policies(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policies", nargs="+", choices=[x.value for x in Policy])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="airsched", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single-policy experiment")
    _common(run, seed_required=True)
    run.add_argument("--policy", choices=[x.value for x in Policy])

    sweep = sub.add_parser("sweep", help="time-average MSE over an SNR x policy grid")
    _common(sweep)
    _policies(sweep)

    cmp_ = sub.add_parser("compare", help="paired-seed policy comparison")
    _common(cmp_)
    _policies(cmp_)

    bound = sub.add_parser("bound", help="evaluate the convergence bound")
    bound.add_argument("--smoothness", type=float, default=1.0)
    bound.add_argument("--grad-noise", type=float, default=1.0)
    bound.add_argument("--heterogeneity", type=float, default=1.0)
    bound.add_argument("--element-variance", type=float, default=1.0)
    bound.add_argument("--grad-norm", type=float, default=1.0)
    bound.add_argument("--initial-gap", type=float, default=1.0)
    bound.add_argument("--dim", type=int, default=10)
    bound.add_argument("--devices", type=int, default=20)
    bound.add_argument("--selected", type=int, default=10)
    bound.add_argument("--rounds", type=int, default=500)
    bound.add_argument("--lr", type=float, default=0.05)
    bound.add_argument("--local-iters", type=int, default=5)
    bound.add_argument("--mse", type=float, nargs="+", default=[0.0])
    bound.add_argument("--weight-skew", type=float, default=1.0)
    bound.add_argument("--rescale", action="store_true")
    return ap


def _config(args) -> config.ExperimentConfig:
    cfg = config.load(args.config) if args.config else config.from_dict({})
    sets = list(args.set)
    for flag, key in (("seed", "master_seed"), ("rounds", "rounds"), ("devices", "n_devices"),
                      ("replications", "replications"), ("policy", "policy")):
        v = getattr(args, flag, None)
        if v is not None:
            sets.append(f"{key}={v}")
    if args.snr:
        sets.append("snr_db=[" + ",".join(map(repr, args.snr)) + "]")
    if getattr(args, "policies", None):
        sets.append("policies=[" + ",".join(args.policies) + "]")
    if args.no_train:
        sets.append("train.enabled=false")
    return config.apply_overrides(cfg, sets)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "bound":
            params = BoundParams(
                smoothness=args.smoothness, grad_noise=args.grad_noise, heterogeneity=args.heterogeneity,
                element_variance=args.element_variance, grad_norm=args.grad_norm, dim=args.dim,
                n_devices=args.devices, n_selected=args.selected, rounds=args.rounds,
                learning_rate=args.lr, local_iters=args.local_iters, initial_gap=args.initial_gap,
                mse_trace=tuple(args.mse), weight_skew=args.weight_skew,
            )
            print(json.dumps(convergence_bound(params, rescale=args.rescale), indent=2))
            return 0
        cfg = _config(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"airsched: error: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        summary = harness.run_experiment(cfg, args.out)
        for rep in summary["reports"]:
            print(f"replication {rep['replication']}: mse={rep['time_average_mse']:.6g} "
                  f"completion={rep['average_completion_time']:.6g} ews_paoi={rep['ews_paoi']:.6g}")
    elif args.command == "sweep":
        for row in harness.run_sweep(cfg, args.out):
            print(f"snr={row['snr_db']:g} {row['policy']}: {row['mse_mean']:.6g} +- {row['mse_stderr']:.2g}")
    else:
        res = harness.run_compare(cfg, args.out)
        for row in res["policies"]:
            print(f"{row['policy']}: completion={row['average_completion_time']:.6g} "
                  f"rel={row['relative_completion_time']:.4g} mse={row['time_average_mse']:.6g}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
