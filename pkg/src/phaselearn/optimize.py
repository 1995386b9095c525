"""Differential-evolution policy search minimizing the Holevo variance.

The search runs DE/rand/1/bin on the N-dimensional torus [0, 2pi)^N of
feedback policies.  Every random draw comes from a counter-based
stream ``SeedSequence(seed, spawn_key=(generation, slot))``: slot 0 of
each generation drives the mutation/crossover draws, slots 1..pop are
the per-candidate objective streams, and generation 0 is population
initialization.  Streams are therefore pure functions of their
coordinates, which makes results identical for any evaluation order or
worker count and makes checkpoint resume bit-for-bit indistinguishable
from an uninterrupted run.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from ._io import atomic_write_text
from .inference import UnsharpSignalError, sharpness_and_holevo
from .interferometer import simulate_batch
from .policy import TWO_PI, Policy
from .states import SymmetricState

__all__ = [
    "DEConfig",
    "TrainingSet",
    "DEResult",
    "UNSHARP_OBJECTIVE",
    "objective",
    "de_optimize",
    "candidate_stream",
    "load_checkpoint",
]

# Sentinel objective for candidates whose estimates carry no phase
# signal (circular resultant ~ 0).  Far above any sharp candidate's
# Holevo variance, so DE ranks such candidates last instead of dying.
UNSHARP_OBJECTIVE = 1e12


@dataclass(frozen=True)
class DEConfig:
    """Hyperparameters of one differential-evolution run.

    ``shots_per_phi`` repeats each training phase that many times per
    objective evaluation.  Defaults follow `DEConfig.defaults`, which
    scales population and generations with the photon count.
    """

    population: int
    weight: float
    crossover: float
    generations: int
    seed: int
    shots_per_phi: int = 1

    def __post_init__(self):
        if self.population < 4:
            raise ValueError(f"population must be >= 4, got {self.population}")
        if not 0.0 < self.weight <= 2.0:
            raise ValueError(f"weight must lie in (0, 2], got {self.weight}")
        if not 0.0 <= self.crossover <= 1.0:
            raise ValueError(f"crossover must lie in [0, 1], got {self.crossover}")
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        if self.shots_per_phi < 1:
            raise ValueError(f"shots_per_phi must be >= 1, got {self.shots_per_phi}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @classmethod
    def defaults(cls, n_photons: int, seed: int, **overrides) -> "DEConfig":
        """Robust defaults scaled to the search dimension."""
        params = {
            "population": max(40, 4 * n_photons),
            "weight": 0.5,
            "crossover": 0.9,
            "generations": 100 * n_photons,
            "seed": seed,
            "shots_per_phi": 1,
        }
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "weight": self.weight,
            "crossover": self.crossover,
            "generations": self.generations,
            "seed": self.seed,
            "shots_per_phi": self.shots_per_phi,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DEConfig":
        return cls(**{k: payload[k] for k in (
            "population", "weight", "crossover", "generations", "seed", "shots_per_phi"
        )})


@dataclass(frozen=True)
class TrainingSet:
    """Phases the policy is trained (or tested) on: 10 N^2 uniform draws."""

    phis: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        phis = np.array(self.phis, dtype=float, copy=True)
        if phis.ndim != 1 or phis.size == 0:
            raise ValueError(f"phis must be a non-empty 1-D vector, got shape {phis.shape}")
        if np.any((phis < 0) | (phis >= TWO_PI)):
            raise ValueError("training phases must lie in [0, 2pi)")
        phis.flags.writeable = False
        object.__setattr__(self, "phis", phis)

    def __len__(self) -> int:
        return self.phis.size

    @classmethod
    def sample(cls, n_photons: int, seed: int) -> "TrainingSet":
        """Draw the standard-size set of 10 N^2 phases uniform on [0, 2pi)."""
        if n_photons < 1:
            raise ValueError(f"photon count must be >= 1, got {n_photons}")
        size = 10 * n_photons * n_photons
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        return cls(rng.uniform(0.0, TWO_PI, size), seed)


def objective(
    policy: Policy,
    input_state: SymmetricState,
    training: TrainingSet,
    rng: np.random.Generator,
    shots_per_phi: int = 1,
) -> float:
    """Holevo variance of the policy over the training phases.

    One simulated shot per phase (``shots_per_phi`` repeats), using the
    caller's random stream, so the value is a deterministic function of
    (policy, training set, stream state).  Unsharp resultants return
    the large sentinel `UNSHARP_OBJECTIVE` instead of raising, so the
    optimizer can rank hopeless candidates.
    """
    phis = training.phis
    if shots_per_phi > 1:
        phis = np.tile(phis, shots_per_phi)
    estimates = simulate_batch(input_state, policy, phis, rng)
    try:
        report = sharpness_and_holevo(np.column_stack([phis, estimates]))
    except UnsharpSignalError:
        return UNSHARP_OBJECTIVE
    return report.holevo_variance


def candidate_stream(seed: int, generation: int, slot: int) -> np.random.Generator:
    """Stream for coordinates (generation, slot) of a run; slot 0 is the driver."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(generation, slot))
    )


@dataclass(frozen=True)
class DEResult:
    """Best policy found, its objective, and the per-generation best trace."""

    policy: Policy
    best_objective: float
    trace: tuple[float, ...]


def _checkpoint_payload(
    config: DEConfig, generation: int, population: np.ndarray,
    objectives: np.ndarray, trace: list[float],
) -> dict:
    return {
        "config": config.to_dict(),
        "generation": generation,
        "population": [[float(v) for v in row] for row in population],
        "objectives": [float(v) for v in objectives],
        "trace": [float(v) for v in trace],
    }


def load_checkpoint(path) -> dict:
    """Read a checkpoint JSON written by `de_optimize`."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    for key in ("config", "generation", "population", "objectives"):
        if key not in payload:
            raise ValueError(f"checkpoint {path} is missing key {key!r}")
    return payload


def _evaluate(
    vectors: np.ndarray,
    objective_fn: Callable[[np.ndarray, np.random.Generator], float],
    seed: int,
    generation: int,
    n_jobs: int,
) -> np.ndarray:
    """Objective of each candidate, each on its own (generation, slot) stream."""
    if n_jobs == 1:
        values = [
            objective_fn(vec, candidate_stream(seed, generation, slot + 1))
            for slot, vec in enumerate(vectors)
        ]
    else:
        values = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(objective_fn)(vec, candidate_stream(seed, generation, slot + 1))
            for slot, vec in enumerate(vectors)
        )
    return np.asarray(values, dtype=float)


def de_optimize(
    dim: int,
    config: DEConfig,
    objective_fn: Callable[[np.ndarray, np.random.Generator], float],
    checkpoint_path=None,
    n_jobs: int = 1,
) -> DEResult:
    """DE/rand/1/bin over the torus [0, 2pi)^dim.

    Each generation builds one trial per member: mutant ``a + F(b-c)``
    from three distinct other members, binomial crossover at rate CR
    with one forced coordinate, component-wise wrap into [0, 2pi)
    (periodic repair, the space is a torus), then greedy selection
    (trial replaces its target when not worse).  The best-objective
    trace is monotone non-increasing.

    If ``checkpoint_path`` is given, a resumable JSON snapshot is
    written after initialization and after every generation; an
    existing snapshot with a matching config is resumed, and the
    continuation is bitwise identical to a run that never stopped.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    seed = config.seed
    start_generation = 0
    trace: list[float] = []
    population = None
    if checkpoint_path is not None and os.path.exists(checkpoint_path):
        payload = load_checkpoint(checkpoint_path)
        if payload["config"] != config.to_dict():
            raise ValueError(
                f"checkpoint {checkpoint_path} was written under a different config"
            )
        population = np.asarray(payload["population"], dtype=float)
        if population.shape != (config.population, dim):
            raise ValueError(
                f"checkpoint population shape {population.shape} does not match "
                f"(population, dim) = {(config.population, dim)}"
            )
        objectives = np.asarray(payload["objectives"], dtype=float)
        trace = [float(v) for v in payload.get("trace", [])]
        start_generation = int(payload["generation"])
    if population is None:
        init_rng = candidate_stream(seed, 0, 0)
        population = init_rng.random((config.population, dim)) * TWO_PI
        objectives = _evaluate(population, objective_fn, seed, 0, n_jobs)
        trace = []
        if checkpoint_path is not None:
            atomic_write_text(
                checkpoint_path,
                json.dumps(_checkpoint_payload(config, 0, population, objectives, trace)),
            )

    for generation in range(start_generation + 1, config.generations + 1):
        driver = candidate_stream(seed, generation, 0)
        trials = np.empty_like(population)
        for i in range(config.population):
            a, b, c = _distinct_partners(driver, config.population, i)
            mutant = population[a] + config.weight * (population[b] - population[c])
            cross = driver.random(dim) < config.crossover
            cross[driver.integers(dim)] = True
            trials[i] = np.where(cross, mutant, population[i])
        trials %= TWO_PI
        trial_objectives = _evaluate(trials, objective_fn, seed, generation, n_jobs)
        improved = trial_objectives <= objectives
        population[improved] = trials[improved]
        objectives[improved] = trial_objectives[improved]
        trace.append(float(objectives.min()))
        if checkpoint_path is not None:
            atomic_write_text(
                checkpoint_path,
                json.dumps(
                    _checkpoint_payload(config, generation, population, objectives, trace)
                ),
            )

    best = int(np.argmin(objectives))
    return DEResult(
        policy=Policy(population[best]),
        best_objective=float(objectives[best]),
        trace=tuple(trace),
    )


def _distinct_partners(
    rng: np.random.Generator, population: int, exclude: int
) -> tuple[int, int, int]:
    """Three distinct member indices, all different from ``exclude``."""
    picked: list[int] = []
    while len(picked) < 3:
        candidate = int(rng.integers(population))
        if candidate != exclude and candidate not in picked:
            picked.append(candidate)
    return picked[0], picked[1], picked[2]
