"""Scikit-learn style wrapper around policy training and single-shot estimation."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .inference import sharpness_and_holevo
from .interferometer import simulate_batch
from .optimize import DEConfig, TrainingSet, de_optimize, objective
from .policy import TWO_PI, Policy
from .scaling import make_input_state

__all__ = ["AdaptivePhaseEstimator"]

# Spawn keys separating the estimator's random streams.
_KEY_TRAIN_SET = 0
_KEY_OPTIMIZER = 1
_KEY_PREDICT = 2


def _validate_phases(X, name: str = "X") -> np.ndarray:
    """Coerce input to a 1-D float array of finite phases in radians."""
    phases = np.asarray(X, dtype=float)
    if phases.ndim == 2 and phases.shape[1] == 1:
        phases = phases[:, 0]
    if phases.ndim != 1:
        raise ValueError(f"{name} must be 1-D (or a single column), got shape {phases.shape}")
    if phases.size == 0:
        raise ValueError(f"{name} must contain at least one phase")
    if not np.all(np.isfinite(phases)):
        raise ValueError(f"{name} must be finite")
    return phases % TWO_PI


class AdaptivePhaseEstimator(BaseEstimator):
    """Adaptive single-shot phase estimator trained by differential evolution.

    `fit` searches for the feedback policy minimizing the Holevo
    variance over a training set of true phases; `predict` runs one
    adaptive measurement shot per input phase and returns the
    estimates; `score` is the negative held-out Holevo variance
    (greater is better, as scikit-learn expects).

    Parameters
    ----------
    n_photons : int, default=4
        Photons per shot; also the policy length.
    input_state : {"sine", "product"}, default="sine"
        Entangled sine-profile input or non-entangled product input.
    population, weight, crossover, generations : optional
        Differential-evolution hyperparameters; ``None`` selects the
        defaults scaled to ``n_photons``.
    shots_per_phi : int, default=1
        Simulated shots per training phase inside the objective.
    n_jobs : int, default=1
        Parallel candidate evaluations per generation.
    random_state : int, default=0
        Master seed; fitting and prediction are deterministic in it.

    Attributes
    ----------
    policy_ : Policy
        Best feedback policy found.
    best_objective_ : float
        Training-set Holevo variance of ``policy_``.
    trace_ : tuple of float
        Best objective per generation (non-increasing).
    """

    def __init__(
        self,
        n_photons: int = 4,
        input_state: str = "sine",
        population: int | None = None,
        weight: float = 0.5,
        crossover: float = 0.9,
        generations: int | None = None,
        shots_per_phi: int = 1,
        n_jobs: int = 1,
        random_state: int = 0,
    ):
        self.n_photons = n_photons
        self.input_state = input_state
        self.population = population
        self.weight = weight
        self.crossover = crossover
        self.generations = generations
        self.shots_per_phi = shots_per_phi
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _config(self) -> DEConfig:
        seed_tree = np.random.SeedSequence(
            self.random_state, spawn_key=(_KEY_OPTIMIZER,)
        )
        return DEConfig.defaults(
            self.n_photons,
            int(seed_tree.generate_state(1, np.uint64)[0]),
            population=self.population,
            weight=self.weight,
            crossover=self.crossover,
            generations=self.generations,
            shots_per_phi=self.shots_per_phi,
        )

    def fit(self, X=None, y=None):
        """Search for the best feedback policy.

        Parameters
        ----------
        X : array-like of shape (n_phases,), optional
            Training phases in radians.  Omitted, the standard set of
            ``10 * n_photons**2`` uniform phases is drawn from
            ``random_state``.
        y : ignored
            Present for scikit-learn API compatibility.
        """
        if self.n_photons < 1:
            raise ValueError(f"n_photons must be >= 1, got {self.n_photons}")
        state = make_input_state(self.input_state, self.n_photons)
        config = self._config()
        if X is None:
            train_seed = int(
                np.random.SeedSequence(self.random_state, spawn_key=(_KEY_TRAIN_SET,))
                .generate_state(1, np.uint64)[0]
            )
            training = TrainingSet.sample(self.n_photons, train_seed)
        else:
            training = TrainingSet(_validate_phases(X), seed=int(self.random_state))

        def candidate_objective(vector, rng):
            return objective(
                Policy(vector), state, training, rng,
                shots_per_phi=config.shots_per_phi,
            )

        result = de_optimize(
            self.n_photons, config, candidate_objective, n_jobs=self.n_jobs
        )
        self.policy_ = result.policy
        self.best_objective_ = result.best_objective
        self.trace_ = result.trace
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        """One adaptive measurement shot per true phase in ``X``.

        Returns the array of estimates in [0, 2pi).  Deterministic
        given ``random_state`` and the fitted policy.
        """
        check_is_fitted(self, "policy_")
        phases = _validate_phases(X)
        rng = np.random.default_rng(
            np.random.SeedSequence(self.random_state, spawn_key=(_KEY_PREDICT,))
        )
        state = make_input_state(self.input_state, self.n_photons)
        return simulate_batch(state, self.policy_, phases, rng)

    def score(self, X, y=None) -> float:
        """Negative Holevo variance of the estimates for phases ``X``."""
        phases = _validate_phases(X)
        estimates = self.predict(phases)
        report = sharpness_and_holevo(np.column_stack([phases, estimates]))
        return -report.holevo_variance
