"""Training runs, held-out evaluation, and photon-number scaling sweeps.

A training run draws the standard training set, searches for a policy
by differential evolution, then scores the winner on a fresh held-out
set of equal size (training-set imprecision is optimistically biased).
Up to ``EXACT_EVAL_MAX_PHOTONS`` photons the held-out score is
computed exactly from the outcome tree (no shot noise); beyond that it
falls back to sampled single shots.  A scaling sweep repeats this over
a photon-number range and fits ``log10(V_H)`` against ``log10(N)`` by
ordinary least squares; the slope is the power-law exponent separating
shot-noise-limited from entanglement-enhanced behavior.

All randomness derives from one master seed through fixed spawn keys,
so every output file is reproducible byte for byte, for any worker
count.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import linregress

from ._io import atomic_write_text
from .inference import error_resultant, resultants_imprecision, sharpness_and_holevo
from .interferometer import simulate_batch
from .optimize import DEConfig, TrainingSet, de_optimize, objective
from .policy import Policy, save_policy
from .states import SymmetricState, product_state, sine_state

__all__ = [
    "PowerLawFit",
    "TrainingOutcome",
    "ScalingResult",
    "BOOTSTRAP_RESAMPLES",
    "EXACT_EVAL_MAX_PHOTONS",
    "fit_power_law",
    "make_input_state",
    "evaluate_policy",
    "evaluate_policy_exact",
    "run_training",
    "run_scaling",
]

# Nonparametric resamples behind every reported standard error.
BOOTSTRAP_RESAMPLES = 200

# Largest photon number whose held-out score is computed exactly from
# the outcome tree; beyond it the tree (2^N leaves per phase) costs
# more than sampling, so evaluation falls back to single shots.
EXACT_EVAL_MAX_PHOTONS = 16

# Spawn keys for the per-run seed tree (master seed -> purpose).
_KEY_TRAIN_SET = 0
_KEY_OPTIMIZER = 1
_KEY_TEST_SET = 2
_KEY_TEST_EVAL = 3
_KEY_BOOTSTRAP = 4
_KEY_TRAIN_EVAL = 5
_KEY_TRAIN_BOOT = 6

STATE_KINDS = ("sine", "product")


def make_input_state(kind: str, n_photons: int) -> SymmetricState:
    """Input state by kind name: ``"sine"`` (entangled) or ``"product"``."""
    if kind == "sine":
        return sine_state(n_photons)
    if kind == "product":
        return product_state(n_photons)
    raise ValueError(f"unknown input state kind {kind!r}; expected one of {STATE_KINDS}")


def _derived_seed(master_seed: int, key: int) -> int:
    """Independent 64-bit seed for one purpose of a run."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(key,))
    return int(sequence.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class PowerLawFit:
    """OLS fit of log10(V_H) on log10(N): V_H ~ 10^intercept * N^exponent."""

    exponent: float
    intercept: float
    r2: float


def fit_power_law(points: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Fit a power law through (N, V_H) points by log-log least squares.

    Requires at least 3 points with positive coordinates.
    """
    points = list(points)
    if len(points) < 3:
        raise ValueError(f"need at least 3 points for a power-law fit, got {len(points)}")
    ns = np.array([float(n) for n, _ in points])
    values = np.array([float(v) for _, v in points])
    if np.any(ns <= 0) or np.any(values <= 0):
        raise ValueError("power-law fit requires positive N and V_H")
    result = linregress(np.log10(ns), np.log10(values))
    return PowerLawFit(
        exponent=float(result.slope),
        intercept=float(result.intercept),
        r2=float(result.rvalue**2),
    )


def _holevo_of_pairs(phis: np.ndarray, estimates: np.ndarray) -> float:
    return sharpness_and_holevo(np.column_stack([phis, estimates])).holevo_variance


def _bootstrap_std_err(
    phis: np.ndarray, estimates: np.ndarray, rng: np.random.Generator
) -> float:
    """Standard error of the Holevo variance by resampling the test pairs."""
    count = phis.size
    values = np.empty(BOOTSTRAP_RESAMPLES)
    for b in range(BOOTSTRAP_RESAMPLES):
        idx = rng.integers(count, size=count)
        values[b] = _holevo_of_pairs(phis[idx], estimates[idx])
    return float(values.std(ddof=1))


@dataclass(frozen=True)
class TrainingOutcome:
    """One finished training run with its held-out evaluation.

    ``train_v_h`` is the optimizer's objective value (sampled, hence
    optimistically biased); ``train_std_err`` is the bootstrap standard
    error of a fresh sampled evaluation of the final policy on the
    training set — the noise scale of that objective.  ``test_v_h`` is
    held out: exact up to ``EXACT_EVAL_MAX_PHOTONS``, sampled beyond.
    """

    n_photons: int
    state_kind: str
    seed: int
    policy: Policy
    config: DEConfig
    train_v_h: float
    train_std_err: float
    test_v_h: float
    test_std_err: float
    trace: tuple[float, ...]

    def report_dict(self) -> dict:
        return {
            "n": self.n_photons,
            "state": self.state_kind,
            "seed": self.seed,
            "train_v_h": self.train_v_h,
            "train_std_err": self.train_std_err,
            "test_v_h": self.test_v_h,
            "test_std_err": self.test_std_err,
            "k": 10 * self.n_photons * self.n_photons,
            "config": self.config.to_dict(),
        }


def evaluate_policy(
    policy: Policy,
    state_kind: str,
    phis: np.ndarray,
    rng: np.random.Generator,
    bootstrap_rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Sampled Holevo variance of a policy (one shot per phase) and its
    bootstrap standard error (0.0 when ``bootstrap_rng`` is omitted)."""
    state = make_input_state(state_kind, policy.n_photons)
    estimates = simulate_batch(state, policy, phis, rng)
    v_h = _holevo_of_pairs(phis, estimates)
    std_err = 0.0
    if bootstrap_rng is not None:
        std_err = _bootstrap_std_err(phis, estimates, bootstrap_rng)
    return v_h, std_err


def evaluate_policy_exact(
    policy: Policy,
    state_kind: str,
    phis: np.ndarray,
    bootstrap_rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Exact Holevo variance of a policy over a phase set, shot-noise free.

    Each phase contributes its exact error resultant from the complete
    outcome tree, so the only uncertainty left is the finiteness of the
    phase set, which the bootstrap standard error measures (0.0 when
    ``bootstrap_rng`` is omitted).  Cost grows as ``2^N`` per phase;
    intended for ``N <= EXACT_EVAL_MAX_PHOTONS``.
    """
    state = make_input_state(state_kind, policy.n_photons)
    resultants = np.array([error_resultant(state, policy, phi) for phi in phis])
    v_h = resultants_imprecision(resultants).holevo_variance
    std_err = 0.0
    if bootstrap_rng is not None:
        count = resultants.size
        values = np.empty(BOOTSTRAP_RESAMPLES)
        for b in range(BOOTSTRAP_RESAMPLES):
            idx = bootstrap_rng.integers(count, size=count)
            values[b] = resultants_imprecision(resultants[idx]).holevo_variance
        std_err = float(values.std(ddof=1))
    return v_h, std_err


def run_training(
    n_photons: int,
    state_kind: str,
    seed: int,
    config: DEConfig | None = None,
    out_path=None,
    checkpoint_path=None,
    n_jobs: int = 1,
) -> TrainingOutcome:
    """Train a policy and score it on a fresh held-out phase set.

    The held-out score is exact (tree-based, shot-noise free) up to
    ``EXACT_EVAL_MAX_PHOTONS`` photons and sampled beyond.  The master
    ``seed`` branches into independent streams for the training set,
    the optimizer, the held-out set, its evaluation shots, the
    bootstrap, and the training-set re-evaluation, so the whole run is
    a pure function of (n_photons, state_kind, seed, config).

    When ``out_path`` is given, writes the policy JSON there and a
    ``<out_path>.report.json`` summary next to it (both atomic).
    """
    input_state = make_input_state(state_kind, n_photons)
    if config is None:
        config = DEConfig.defaults(n_photons, _derived_seed(seed, _KEY_OPTIMIZER))
    training = TrainingSet.sample(n_photons, _derived_seed(seed, _KEY_TRAIN_SET))

    def candidate_objective(vector: np.ndarray, rng: np.random.Generator) -> float:
        return objective(
            Policy(vector), input_state, training, rng,
            shots_per_phi=config.shots_per_phi,
        )

    result = de_optimize(
        n_photons, config, candidate_objective,
        checkpoint_path=checkpoint_path, n_jobs=n_jobs,
    )

    held_out = TrainingSet.sample(n_photons, _derived_seed(seed, _KEY_TEST_SET))
    boot_rng = np.random.default_rng(
        np.random.SeedSequence(_derived_seed(seed, _KEY_BOOTSTRAP))
    )
    if n_photons <= EXACT_EVAL_MAX_PHOTONS:
        test_v_h, test_std_err = evaluate_policy_exact(
            result.policy, state_kind, held_out.phis, boot_rng
        )
    else:
        eval_rng = np.random.default_rng(
            np.random.SeedSequence(_derived_seed(seed, _KEY_TEST_EVAL))
        )
        test_v_h, test_std_err = evaluate_policy(
            result.policy, state_kind, held_out.phis, eval_rng, boot_rng
        )
    train_rng = np.random.default_rng(
        np.random.SeedSequence(_derived_seed(seed, _KEY_TRAIN_EVAL))
    )
    train_boot = np.random.default_rng(
        np.random.SeedSequence(_derived_seed(seed, _KEY_TRAIN_BOOT))
    )
    train_phis = training.phis
    if config.shots_per_phi > 1:
        train_phis = np.tile(train_phis, config.shots_per_phi)
    _, train_std_err = evaluate_policy(
        result.policy, state_kind, train_phis, train_rng, train_boot
    )

    outcome = TrainingOutcome(
        n_photons=n_photons,
        state_kind=state_kind,
        seed=seed,
        policy=result.policy,
        config=config,
        train_v_h=result.best_objective,
        train_std_err=train_std_err,
        test_v_h=test_v_h,
        test_std_err=test_std_err,
        trace=result.trace,
    )
    if out_path is not None:
        meta = {
            "seed": seed,
            "generations": config.generations,
            "objective": result.best_objective,
            "state": state_kind,
            "test_v_h": test_v_h,
            "test_std_err": test_std_err,
        }
        save_policy(result.policy, out_path, meta)
        atomic_write_text(
            f"{os.fspath(out_path)}.report.json",
            json.dumps(outcome.report_dict(), indent=2) + "\n",
        )
    return outcome


@dataclass(frozen=True)
class ScalingResult:
    """Held-out imprecision per photon number with its power-law fit."""

    state_kind: str
    seed: int
    rows: tuple[tuple[int, float, float], ...]
    fit: PowerLawFit

    def to_csv(self) -> str:
        lines = ["n,v_h,std_err"]
        for n, v_h, std_err in self.rows:
            lines.append(f"{n},{v_h!r},{std_err!r}")
        return "\n".join(lines) + "\n"

    def summary_dict(self) -> dict:
        return {
            "state": self.state_kind,
            "seed": self.seed,
            "exponent": self.fit.exponent,
            "intercept": self.fit.intercept,
            "r2": self.fit.r2,
            "rows": [
                {"n": n, "v_h": v_h, "std_err": std_err}
                for n, v_h, std_err in self.rows
            ],
        }


def load_scaling_csv(path) -> list[tuple[int, float, float]]:
    """Read back rows written by `ScalingResult.to_csv` (lossless)."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != "n,v_h,std_err":
        raise ValueError(f"{path} is not a scaling CSV")
    rows = []
    for line in lines[1:]:
        n, v_h, std_err = line.split(",")
        rows.append((int(n), float(v_h), float(std_err)))
    return rows


def run_scaling(
    n_min: int,
    n_max: int,
    state_kind: str,
    seed: int,
    out_dir=None,
    config_overrides: dict | None = None,
    workers: int = 1,
) -> ScalingResult:
    """Train and evaluate one policy per ``N in [n_min, n_max]``, fit the law.

    Each N gets an independent master seed spawned from ``seed`` keyed
    by N, so the rows do not depend on scheduling; per-N runs are
    distributed over ``workers`` processes.  With ``out_dir`` set,
    writes ``scaling_<state>.csv``, ``scaling_<state>.json``, and the
    per-N policy/report files into the directory.
    """
    if n_min < 1 or n_max < n_min:
        raise ValueError(f"invalid photon-number range [{n_min}, {n_max}]")
    make_input_state(state_kind, 1)
    ns = list(range(n_min, n_max + 1))
    overrides = config_overrides or {}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    def one_run(n: int) -> TrainingOutcome:
        run_seed = int(
            np.random.SeedSequence(seed, spawn_key=(n,)).generate_state(1, np.uint64)[0]
        )
        config = DEConfig.defaults(
            n, _derived_seed(run_seed, _KEY_OPTIMIZER), **overrides
        )
        out_path = None
        if out_dir is not None:
            out_path = os.path.join(out_dir, f"policy_{state_kind}_n{n}.json")
        return run_training(n, state_kind, run_seed, config=config, out_path=out_path)

    if workers == 1:
        outcomes = [one_run(n) for n in ns]
    else:
        outcomes = Parallel(n_jobs=workers)(delayed(one_run)(n) for n in ns)
    outcomes = sorted(outcomes, key=lambda o: o.n_photons)

    rows = tuple((o.n_photons, o.test_v_h, o.test_std_err) for o in outcomes)
    fit = fit_power_law([(n, v) for n, v, _ in rows])
    result = ScalingResult(state_kind=state_kind, seed=seed, rows=rows, fit=fit)
    if out_dir is not None:
        atomic_write_text(
            os.path.join(out_dir, f"scaling_{state_kind}.csv"), result.to_csv()
        )
        atomic_write_text(
            os.path.join(out_dir, f"scaling_{state_kind}.json"),
            json.dumps(result.summary_dict(), indent=2) + "\n",
        )
    return result
