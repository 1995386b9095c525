"""Single-photon interferometer passage as Kraus operators, plus adaptive simulation.

One photon at a time is peeled off the symmetric N-photon state, sent
through a Mach-Zehnder interferometer carrying the unknown phase
``phi`` in one arm and the controllable phase ``control`` in the
other, and detected at one of the two output ports.  The port bit
updates the control phase through the feedback policy before the next
photon enters; the final control phase is the estimate.

Conventions (fixed here once, used consistently everywhere):

* beamsplitter ``B = (1/sqrt 2) [[1, i], [i, 1]]``, so the one-photon
  transfer matrix is ``V = B @ diag(e^{i phi}, e^{i control}) @ B``;
* detector bit x = 1 is the port that fires with certainty when
  ``phi == control`` (``|V[1,0]|^2 = cos^2((phi-control)/2)``).

Any unitarily equivalent choice merely relabels policies and leaves
every attainable imprecision unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .policy import TWO_PI, OutcomeHistory, Policy, feedback_update
from .states import SymmetricState

__all__ = [
    "PhasePair",
    "MeasurementRecord",
    "DegenerateBranchError",
    "PROB_FLOOR",
    "single_photon_matrix",
    "kraus_apply",
    "measure_one",
    "simulate_single_shot",
    "simulate_batch",
]

# Branch probabilities below this are treated as exactly zero; dividing
# by their square roots would amplify denormal noise into garbage states.
PROB_FLOOR = 1e-300


class DegenerateBranchError(ArithmeticError):
    """Raised when a measurement selects a branch of effectively zero probability."""


@dataclass(frozen=True)
class PhasePair:
    """Unknown interferometer phase and controllable phase, both mod 2pi."""

    phi: float
    control: float

    def __post_init__(self):
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)
        object.__setattr__(self, "control", float(self.control) % TWO_PI)


@dataclass(frozen=True)
class MeasurementRecord:
    """Result of detecting one photon: port bit, its probability, reduced state."""

    outcome: int
    probability: float
    post_state: SymmetricState


def single_photon_matrix(p: PhasePair) -> np.ndarray:
    """One-photon transfer matrix V of the full interferometer.

    Row index is the detector bit, column index the input mode (0 = mode
    a).  ``V = B @ diag(e^{i phi}, e^{i control}) @ B`` evaluates to

        (1/2) [[e^{i phi} - e^{i c},   i(e^{i phi} + e^{i c})],
               [i(e^{i phi} + e^{i c}), e^{i c} - e^{i phi}  ]]

    which is unitary with ``|V[0,0]|^2 = sin^2((phi-c)/2)``.
    """
    e_phi = np.exp(1j * p.phi)
    e_con = np.exp(1j * p.control)
    diff = 0.5 * (e_phi - e_con)
    summ = 0.5j * (e_phi + e_con)
    return np.array([[diff, summ], [summ, -diff]])


def _extraction_weights(photons: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-photon extraction weights for a symmetric ``photons``-photon state.

    Removing one photon from ``|n, R-n>`` leaves ``|n-1, R-n>`` with
    weight sqrt(n/R) (the photon came from mode a) or ``|n, R-n-1>``
    with weight sqrt((R-n)/R) (mode b); these are the squared overlaps
    of the symmetric state with one tensor factor split off.
    """
    n = np.arange(photons)
    mode_a = np.sqrt((n + 1) / photons)
    mode_b = np.sqrt((photons - n) / photons)
    return mode_a, mode_b


def kraus_apply(state: SymmetricState, x: int, p: PhasePair) -> np.ndarray:
    """Unnormalized reduced amplitudes after detecting one photon at port ``x``.

    Returns the length-R amplitude vector of the (R-1)-photon state

        (K_x psi)_n = sqrt((n+1)/R) V[x,0] psi_{n+1}
                    + sqrt((R-n)/R) V[x,1] psi_n ,   n = 0..R-1,

    whose squared norm is the outcome probability.  The two operators
    satisfy K_0^dag K_0 + K_1^dag K_1 = identity.
    """
    if state.photons < 1:
        raise ValueError("cannot measure a photon out of a zero-photon state")
    if x not in (0, 1):
        raise ValueError(f"outcome must be a bit, got {x}")
    v = single_photon_matrix(p)
    mode_a, mode_b = _extraction_weights(state.photons)
    upper = mode_a * state.amps[1:]
    lower = mode_b * state.amps[:-1]
    return v[x, 0] * upper + v[x, 1] * lower


def branch_probabilities(state: SymmetricState, p: PhasePair) -> tuple[float, float]:
    """Outcome probabilities (P(0), P(1)) for one photon detection."""
    branch0 = kraus_apply(state, 0, p)
    branch1 = kraus_apply(state, 1, p)
    p0 = float(np.vdot(branch0, branch0).real)
    p1 = float(np.vdot(branch1, branch1).real)
    return p0, p1


def measure_one(state: SymmetricState, p: PhasePair, u: float) -> MeasurementRecord:
    """Detect one photon, selecting the branch with the uniform draw ``u``.

    Outcome 0 is selected iff ``u < P(0)``; the returned record carries
    the realized outcome, its probability, and the normalized reduced
    state.

    Raises
    ------
    DegenerateBranchError
        If the selected branch has probability below 1e-300 and cannot
        be normalized.
    """
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    branch0 = kraus_apply(state, 0, p)
    p0 = float(np.vdot(branch0, branch0).real)
    if u < p0:
        outcome, branch, prob = 0, branch0, p0
    else:
        branch = kraus_apply(state, 1, p)
        prob = float(np.vdot(branch, branch).real)
        outcome = 1
    if prob < PROB_FLOOR:
        raise DegenerateBranchError(
            f"outcome {outcome} has probability {prob!r}; state cannot be normalized"
        )
    post = SymmetricState(state.photons - 1, branch / math.sqrt(prob))
    return MeasurementRecord(outcome, min(prob, 1.0), post)


def simulate_single_shot(
    state: SymmetricState, policy: Policy, phi: float, rng: np.random.Generator
) -> tuple[float, OutcomeHistory]:
    """Run one full adaptive estimation shot.

    Photons are measured one at a time; after each detection the
    control phase is updated by the policy (starting from control = 0).
    Returns the estimate (the final control phase) and the complete
    outcome history.  Deterministic given the generator state.
    """
    if policy.n_photons != state.photons:
        raise ValueError(
            f"policy length {policy.n_photons} does not match photon count {state.photons}"
        )
    control = 0.0
    outcomes = []
    phases = [0.0]
    current = state
    for delta in policy.deltas:
        record = measure_one(current, PhasePair(phi, control), rng.random())
        current = record.post_state
        control = feedback_update(control, record.outcome, delta)
        outcomes.append(record.outcome)
        phases.append(control)
    history = OutcomeHistory(tuple(outcomes), tuple(phases))
    return control, history


def simulate_batch(
    state: SymmetricState,
    policy: Policy,
    phis: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized single shots: one estimate per entry of ``phis``.

    Semantically equivalent to looping `simulate_single_shot` over
    ``phis`` with per-shot streams, but all shots advance through the
    photon steps together, so each step is a handful of array
    operations regardless of the batch size.  The optimizer objective
    (thousands of shots per candidate policy) runs through here.

    Raises
    ------
    DegenerateBranchError
        If any shot selects a branch of probability below 1e-300.
    """
    phis = np.asarray(phis, dtype=float)
    if phis.ndim != 1:
        raise ValueError(f"phis must be 1-D, got shape {phis.shape}")
    n = state.photons
    if policy.n_photons != n:
        raise ValueError(
            f"policy length {policy.n_photons} does not match photon count {n}"
        )
    shots = phis.size
    if shots == 0:
        return np.zeros(0)
    # States stay unnormalized; norm2 carries each shot's squared norm
    # (the probability of its history so far), so the per-step division
    # disappears and branch selection uses conditional probabilities.
    amps = np.tile(state.amps, (shots, 1))
    norm2 = np.ones(shots)
    controls = np.zeros(shots)
    e_phi = np.exp(1j * phis)
    for m in range(n):
        photons_left = n - m
        mode_a, mode_b = _extraction_weights(photons_left)
        upper = amps[:, 1:] * mode_a
        lower = amps[:, :-1] * mode_b
        e_con = np.exp(1j * controls)
        v00 = 0.5 * (e_phi - e_con)
        v01 = 0.5j * (e_phi + e_con)
        branch0 = v00[:, None] * upper
        branch0 += v01[:, None] * lower
        # |branch0|^2 row sums via the interleaved real/imag view.
        flat = branch0.view(np.float64)
        p0 = np.einsum("ij,ij->i", flat, flat)
        took_1 = rng.random(shots) * norm2 >= p0
        # v10 = v01 and v11 = -v00, so the chosen branch reuses the factors.
        vx0 = np.where(took_1, v01, v00)
        vx1 = np.where(took_1, -v00, v01)
        chosen = vx0[:, None] * upper
        chosen += vx1[:, None] * lower
        # took_1 implies u * norm2 >= p0, so norm2 - p0 > 0 here.
        new_norm2 = np.where(took_1, norm2 - p0, p0)
        if np.any(new_norm2 < PROB_FLOOR * norm2):
            raise DegenerateBranchError(
                "a shot selected a branch of probability below 1e-300"
            )
        amps = chosen
        norm2 = new_norm2
        signs = np.where(took_1, 1.0, -1.0)
        controls = (controls + signs * policy.deltas[m]) % TWO_PI
    return controls
