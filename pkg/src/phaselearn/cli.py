"""Command-line interface: train, evaluate, fisher, and scaling subcommands.

Configuration precedence is flags > config file (``--config``, a flat
JSON object keyed by flag name) > built-in defaults.  Exit codes:
0 success, 2 usage error (bad flags, malformed files, out-of-contract
sizes), 3 numerical failure (degenerate branch, unsharp signal).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ._io import atomic_write_text
from .inference import (
    UnsharpSignalError,
    distribution_imprecision,
    estimate_distribution,
    fisher_information,
    plain_variance,
)
from .interferometer import DegenerateBranchError
from .optimize import DEConfig
from .policy import TWO_PI, TreeTooLargeError, load_policy
from .scaling import evaluate_policy, make_input_state, run_scaling, run_training

__all__ = ["main"]

# Flags that may come from the --config JSON file, per subcommand.
_CONFIG_KEYS = {
    "train": ("seed", "pop", "weight", "cr", "gens", "shots", "jobs"),
    "evaluate": ("seed", "state"),
    "fisher": ("state",),
    "scaling": ("seed", "pop", "weight", "cr", "gens", "shots", "workers"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaselearn",
        description="Adaptive interferometric phase estimation: policy training, "
        "evaluation, Fisher bounds, and scaling sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="search for a feedback policy")
    train.add_argument("--n", type=int, required=True, help="photon count")
    train.add_argument("--state", choices=("sine", "product"), required=True)
    train.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    train.add_argument("--pop", type=int, default=None, help="DE population size")
    train.add_argument("--weight", type=float, default=None, help="DE mutation weight F")
    train.add_argument("--cr", type=float, default=None, help="DE crossover rate")
    train.add_argument("--gens", type=int, default=None, help="DE generations")
    train.add_argument("--shots", type=int, default=None, help="shots per training phase")
    train.add_argument("--jobs", type=int, default=None, help="parallel candidate evaluations")
    train.add_argument("--checkpoint", default=None, help="resumable checkpoint path")
    train.add_argument("--out", required=True, help="policy JSON output path")
    train.add_argument("--config", default=None, help="JSON config file")

    evaluate = sub.add_parser("evaluate", help="imprecision of a trained policy")
    evaluate.add_argument("--policy", required=True, help="policy JSON path")
    group = evaluate.add_mutually_exclusive_group(required=True)
    group.add_argument("--phi", type=float, default=None,
                       help="exact distribution at one true phase")
    group.add_argument("--random", type=int, default=None, metavar="COUNT",
                       help="sampled shots at COUNT random true phases")
    evaluate.add_argument("--seed", type=int, default=None, help="sampling seed (default 0)")
    evaluate.add_argument("--state", choices=("sine", "product"), default=None,
                          help="input state (default: from policy metadata)")
    evaluate.add_argument("--config", default=None, help="JSON config file")

    fisher = sub.add_parser("fisher", help="Fisher information and CRLB at one phase")
    fisher.add_argument("--policy", required=True, help="policy JSON path")
    fisher.add_argument("--phi", type=float, required=True, help="true phase (radians)")
    fisher.add_argument("--step", type=float, required=True,
                        help="central-difference step in [1e-6, 1e-3]")
    fisher.add_argument("--state", choices=("sine", "product"), default=None,
                        help="input state (default: from policy metadata)")
    fisher.add_argument("--out", default=None, help="also write the JSON report here")
    fisher.add_argument("--config", default=None, help="JSON config file")

    scaling = sub.add_parser("scaling", help="train per N and fit the power law")
    scaling.add_argument("--n-min", type=int, required=True)
    scaling.add_argument("--n-max", type=int, required=True)
    scaling.add_argument("--state", choices=("sine", "product"), required=True)
    scaling.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    scaling.add_argument("--pop", type=int, default=None, help="DE population size")
    scaling.add_argument("--weight", type=float, default=None, help="DE mutation weight F")
    scaling.add_argument("--cr", type=float, default=None, help="DE crossover rate")
    scaling.add_argument("--gens", type=int, default=None, help="DE generations")
    scaling.add_argument("--shots", type=int, default=None, help="shots per training phase")
    scaling.add_argument("--workers", type=int, default=None, help="parallel per-N runs")
    scaling.add_argument("--out", required=True, help="output directory")
    scaling.add_argument("--config", default=None, help="JSON config file")
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill flags left at None from the --config file, if any."""
    if getattr(args, "config", None) is None:
        return args
    with open(args.config, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict):
        raise ValueError(f"config file {args.config} must hold a JSON object")
    allowed = _CONFIG_KEYS.get(args.command, ())
    for key, value in payload.items():
        if key not in allowed:
            raise ValueError(
                f"config key {key!r} is not accepted by {args.command!r} "
                f"(allowed: {', '.join(allowed)})"
            )
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _state_kind(args_state: str | None, meta: dict, policy_path: str) -> str:
    if args_state is not None:
        return args_state
    kind = meta.get("state")
    if kind is None:
        raise ValueError(
            f"policy file {policy_path} does not record its input state; pass --state"
        )
    return str(kind)


def _cmd_train(args: argparse.Namespace) -> int:
    seed = 0 if args.seed is None else int(args.seed)
    config = DEConfig.defaults(
        args.n,
        int(np.random.SeedSequence(seed, spawn_key=(1,)).generate_state(1, np.uint64)[0]),
        population=args.pop,
        weight=args.weight,
        crossover=args.cr,
        generations=args.gens,
        shots_per_phi=args.shots,
    )
    outcome = run_training(
        args.n, args.state, seed,
        config=config,
        out_path=args.out,
        checkpoint_path=args.checkpoint,
        n_jobs=1 if args.jobs is None else int(args.jobs),
    )
    print(json.dumps(outcome.report_dict()))
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    policy, meta = load_policy(args.policy)
    kind = _state_kind(args.state, meta, args.policy)
    if args.phi is not None:
        state = make_input_state(kind, policy.n_photons)
        dist = estimate_distribution(state, policy, args.phi)
        report = distribution_imprecision(dist)
        payload = {
            "n": policy.n_photons,
            "state": kind,
            "phi": float(args.phi % TWO_PI),
            "mode": "exact",
            "v_h": report.holevo_variance,
            "sharpness": report.sharpness,
            "bias": report.bias,
            "plain_variance": plain_variance(dist),
            "support_size": len(dist.support),
        }
    else:
        if args.random < 1:
            raise ValueError(f"--random must be >= 1, got {args.random}")
        seed = 0 if args.seed is None else int(args.seed)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        phis = rng.uniform(0.0, TWO_PI, args.random)
        eval_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        boot_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))
        v_h, std_err = evaluate_policy(policy, kind, phis, eval_rng, boot_rng)
        payload = {
            "n": policy.n_photons,
            "state": kind,
            "mode": "sampled",
            "shots": int(args.random),
            "seed": seed,
            "v_h": v_h,
            "std_err": std_err,
        }
    print(json.dumps(payload))
    return 0


def _cmd_fisher(args: argparse.Namespace) -> int:
    policy, meta = load_policy(args.policy)
    kind = _state_kind(args.state, meta, args.policy)
    state = make_input_state(kind, policy.n_photons)
    result = fisher_information(state, policy, args.phi, args.step)
    payload = result.to_json_dict()
    text = json.dumps(payload)
    if args.out is not None:
        atomic_write_text(args.out, text + "\n")
    print(text)
    return 0


def _cmd_scaling(args: argparse.Namespace) -> int:
    seed = 0 if args.seed is None else int(args.seed)
    overrides = {
        "population": args.pop,
        "weight": args.weight,
        "crossover": args.cr,
        "generations": args.gens,
        "shots_per_phi": args.shots,
    }
    result = run_scaling(
        args.n_min, args.n_max, args.state, seed,
        out_dir=args.out,
        config_overrides=overrides,
        workers=1 if args.workers is None else int(args.workers),
    )
    print(json.dumps(result.summary_dict()))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "fisher": _cmd_fisher,
    "scaling": _cmd_scaling,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return _COMMANDS[args.command](args)
    except (DegenerateBranchError, UnsharpSignalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (TreeTooLargeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
