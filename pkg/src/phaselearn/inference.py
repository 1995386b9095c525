"""Exact outcome/estimate distributions, imprecision statistics, and Fisher bounds.

The single-shot procedure is a depth-N binary decision tree.  Carrying
the unnormalized reduced state down every branch makes each leaf's
probability the squared norm of its unnormalized leaf state, i.e. the
product of the branch norms along the path.  This module enumerates
that tree exactly (level by level, all branches of a level advanced in
one array operation), groups leaves into estimate preimages, and
derives the statistics built on top: sharpness and its variance
surrogate for circular data, the plain wrapped variance, and the
Fisher information with its Cramer-Rao bound.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .interferometer import _extraction_weights
from .policy import TWO_PI, Policy, check_tree_depth
from .states import SymmetricState

__all__ = [
    "EstimateDistribution",
    "ImprecisionReport",
    "FisherResult",
    "UnsharpSignalError",
    "SHARPNESS_FLOOR",
    "BRANCH_PROB_FLOOR",
    "outcome_distribution",
    "estimate_distribution",
    "sharpness_and_holevo",
    "distribution_imprecision",
    "error_resultant",
    "resultants_imprecision",
    "plain_variance",
    "fisher_information",
    "crlb",
]

# Circular resultants below this mean the estimate carries no phase
# signal; the Holevo variance would exceed 1e24.
SHARPNESS_FLOOR = 1e-12

# Leaves thinner than this are excluded from Fisher sums: their
# log-derivatives are dominated by rounding noise.
BRANCH_PROB_FLOOR = 1e-12

# Tolerance for treating two estimate values as the same support point.
ESTIMATE_MERGE_TOL = 1e-12


class UnsharpSignalError(ArithmeticError):
    """Raised when the circular resultant is too small to define a variance."""


def wrap_signed(angle):
    """Wrap angle(s) to the signed interval (-pi, pi]."""
    return np.pi - (np.pi - np.asarray(angle)) % TWO_PI


def _leaf_arrays(
    state: SymmetricState, policy: Policy, phi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and estimates of all 2^N leaves.

    Leaf ``i`` encodes the outcome string with the first photon's bit as
    the most significant bit of ``i``.  Probabilities are squared norms
    of the unnormalized leaf states; their sum is 1 up to rounding.
    """
    n = state.photons
    if policy.n_photons != n:
        raise ValueError(
            f"policy length {policy.n_photons} does not match photon count {n}"
        )
    check_tree_depth(n)
    e_phi = np.exp(1j * (phi % TWO_PI))
    amps = state.amps[None, :].copy()
    controls = np.zeros(1)
    for m in range(n):
        photons_left = n - m
        mode_a, mode_b = _extraction_weights(photons_left)
        upper = mode_a[None, :] * amps[:, 1:]
        lower = mode_b[None, :] * amps[:, :-1]
        e_con = np.exp(1j * controls)
        v00 = 0.5 * (e_phi - e_con)
        v01 = 0.5j * (e_phi + e_con)
        branch0 = v00[:, None] * upper + v01[:, None] * lower
        branch1 = v01[:, None] * upper - v00[:, None] * lower
        # Children interleave so the new bit is the least significant so far.
        amps = np.stack([branch0, branch1], axis=1).reshape(-1, photons_left)
        delta = policy.deltas[m]
        controls = np.stack(
            [(controls - delta) % TWO_PI, (controls + delta) % TWO_PI], axis=1
        ).reshape(-1)
    probs = np.einsum("ij,ij->i", amps, amps.conj()).real
    return probs, controls


def outcome_distribution(
    state: SymmetricState, policy: Policy, phi: float
) -> dict[str, float]:
    """Exact probability of every outcome string.

    Returns a map from the outcome string (first photon's bit first,
    e.g. ``"0110"``) to its probability.  Total mass is 1 within 1e-9;
    guarded at N <= 26.
    """
    n = state.photons
    probs, _ = _leaf_arrays(state, policy, phi)
    return {format(i, f"0{n}b"): float(p) for i, p in enumerate(probs)}


@dataclass(frozen=True)
class EstimateDistribution:
    """Discrete distribution of the estimate for one true phase.

    ``support`` holds (estimate, probability) pairs with distinct
    estimates (mod 2pi, merged at 1e-12 tolerance), probabilities
    summing to 1 within 1e-9.
    """

    support: tuple[tuple[float, float], ...]
    true_phi: float

    @property
    def estimates(self) -> np.ndarray:
        return np.array([e for e, _ in self.support])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.support])


def estimate_distribution(
    state: SymmetricState, policy: Policy, phi: float
) -> EstimateDistribution:
    """Group outcome strings by their estimate and sum the probabilities.

    The estimator (final control phase) is generally many-to-one: all
    strings landing within 1e-12 of each other on the circle form one
    preimage set and one support point.
    """
    probs, estimates = _leaf_arrays(state, policy, phi)
    order = np.argsort(estimates, kind="stable")
    est_sorted = estimates[order]
    prob_sorted = probs[order]
    # Split where consecutive sorted estimates differ by more than the
    # merge tolerance, then check whether the first and last clusters
    # meet across the 0/2pi seam.
    boundaries = np.nonzero(np.diff(est_sorted) > ESTIMATE_MERGE_TOL)[0] + 1
    groups = np.split(np.arange(est_sorted.size), boundaries)
    support = [
        (float(est_sorted[g[0]]), float(prob_sorted[g].sum())) for g in groups
    ]
    if len(support) > 1:
        wrap_gap = (support[0][0] + TWO_PI) - est_sorted[groups[-1][-1]]
        if wrap_gap <= ESTIMATE_MERGE_TOL:
            first = support.pop(0)
            last = support.pop()
            support.append((last[0], last[1] + first[1]))
    return EstimateDistribution(tuple(support), float(phi % TWO_PI))


@dataclass(frozen=True)
class ImprecisionReport:
    """Circular-imprecision summary of (true phase, estimate) samples.

    ``holevo_variance`` is ``sharpness**-2 - 1`` by construction;
    ``bias`` is the circular distance between the true phase and the
    mean estimate, defined only when all samples share one true phase.
    """

    sharpness: float
    holevo_variance: float
    circular_mean: float
    bias: float | None
    sample_count: int


def _imprecision_from_resultant(
    resultant: complex, sample_count: int, single_phi: bool
) -> ImprecisionReport:
    sharpness = abs(resultant)
    if sharpness < SHARPNESS_FLOOR:
        raise UnsharpSignalError(
            f"circular resultant {sharpness!r} is below {SHARPNESS_FLOOR}; "
            "the estimate carries no phase signal"
        )
    mean_error = cmath.phase(resultant)
    bias = abs(mean_error) if single_phi else None
    return ImprecisionReport(
        sharpness=sharpness,
        holevo_variance=sharpness**-2 - 1.0,
        circular_mean=mean_error,
        bias=bias,
        sample_count=sample_count,
    )


def sharpness_and_holevo(pairs) -> ImprecisionReport:
    """Sharpness and Holevo variance of (true phase, estimate) pairs.

    The sharpness is the magnitude of the circular mean of the errors,
    ``S = |sum_k exp(i(phi_k - estimate_k)) / K|``, and the Holevo
    variance is ``S**-2 - 1``.  Both are invariant under a global
    rotation of all pairs.

    Raises
    ------
    UnsharpSignalError
        If S falls below 1e-12 (variance effectively infinite).
    """
    pairs = np.asarray(list(pairs), dtype=float)
    if pairs.size == 0:
        raise ValueError("need at least one (phi, estimate) pair")
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"expected pairs of (phi, estimate), got shape {pairs.shape}")
    phis = pairs[:, 0]
    errors = phis - pairs[:, 1]
    resultant = complex(np.exp(1j * errors).mean())
    single_phi = bool(np.all(phis == phis[0]))
    return _imprecision_from_resultant(resultant, pairs.shape[0], single_phi)


def distribution_imprecision(dist: EstimateDistribution) -> ImprecisionReport:
    """Imprecision of an exact estimate distribution (probability-weighted)."""
    errors = dist.true_phi - dist.estimates
    resultant = complex(np.sum(dist.probabilities * np.exp(1j * errors)))
    return _imprecision_from_resultant(resultant, len(dist.support), True)


def error_resultant(state: SymmetricState, policy: Policy, phi: float) -> complex:
    """Exact circular resultant of the estimate error at one true phase.

    ``sum_x P(x) exp(i (phi - estimate(x)))`` over the complete outcome
    tree; its magnitude is the per-phase sharpness.  Averaging these
    resultants over a phase set gives shot-noise-free policy
    evaluation, the exact counterpart of scoring sampled estimates.
    """
    probs, estimates = _leaf_arrays(state, policy, phi)
    return complex(np.sum(probs * np.exp(1j * (phi - estimates))))


def resultants_imprecision(resultants) -> ImprecisionReport:
    """Imprecision of equally weighted per-phase error resultants."""
    values = np.asarray(resultants, dtype=complex)
    if values.size == 0:
        raise ValueError("need at least one error resultant")
    return _imprecision_from_resultant(
        complex(values.mean()), int(values.size), values.size == 1
    )


def plain_variance(dist: EstimateDistribution) -> float:
    """Mean squared wrapped error ``sum_k P_k (phi - estimate_k)^2``.

    Differences are wrapped to (-pi, pi] before squaring.  This is the
    quantity the Cramer-Rao bound speaks about; for broad distributions
    on the circle it saturates, which is why optimization uses the
    Holevo variance instead.
    """
    wrapped = wrap_signed(dist.true_phi - dist.estimates)
    return float(np.sum(dist.probabilities * wrapped**2))


@dataclass(frozen=True)
class FisherResult:
    """Fisher information of the outcome distribution at one phase.

    ``excluded_mass`` is the total probability of leaves thinner than
    1e-12 that were left out of the sum; ``warning`` flags excluded
    mass above 1e-6.
    """

    n_photons: int
    phi: float
    fisher: float
    step: float
    excluded_mass: float
    warning: bool

    def to_json_dict(self) -> dict:
        return {
            "n": self.n_photons,
            "phi": self.phi,
            "fisher": self.fisher,
            "crlb": crlb(self.fisher),
            "excluded_mass": self.excluded_mass,
            "h": self.step,
            "warning": self.warning,
        }


def fisher_information(
    state: SymmetricState, policy: Policy, phi: float, h: float = 1e-5
) -> FisherResult:
    """Fisher information ``sum_x P (d log P / d phi)^2`` of the outcome tree.

    The derivative is taken by central differences at step ``h``
    (allowed range [1e-6, 1e-3]) over the exact outcome distribution.
    Leaves with probability below 1e-12 at the center point are
    excluded; their total mass is reported, with a warning flag when it
    exceeds 1e-6.
    """
    if not 1e-6 <= h <= 1e-3:
        raise ValueError(f"finite-difference step must lie in [1e-6, 1e-3], got {h}")
    center, _ = _leaf_arrays(state, policy, phi)
    upper, _ = _leaf_arrays(state, policy, phi + h)
    lower, _ = _leaf_arrays(state, policy, phi - h)
    keep = center >= BRANCH_PROB_FLOOR
    derivative = (upper[keep] - lower[keep]) / (2.0 * h)
    fisher = float(np.sum(derivative**2 / center[keep]))
    excluded = float(center[~keep].sum())
    return FisherResult(
        n_photons=state.photons,
        phi=float(phi % TWO_PI),
        fisher=fisher,
        step=float(h),
        excluded_mass=excluded,
        warning=excluded > 1e-6,
    )


def crlb(fisher: float) -> float:
    """Cramer-Rao lower bound ``1 / sqrt(F)`` on the estimate's deviation."""
    if not fisher > 0:
        raise ValueError(f"Fisher information must be positive, got {fisher}")
    return 1.0 / math.sqrt(fisher)
