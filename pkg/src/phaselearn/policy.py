"""Feedback policies, the Markovian phase-update rule, and decision-tree bookkeeping.

A feedback policy is the vector of per-step increments (one entry per
photon) applied to the controllable interferometer phase.  After the
m-th detector click with outcome ``x`` the control phase moves by
``+delta_m`` if x = 1 and ``-delta_m`` if x = 0; the final control
phase is reported as the estimate.  A single-shot run traces one
branch of a binary decision tree of depth N, and this module also
provides the tree-size formula and exhaustive history enumeration used
by the exact-distribution machinery.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from ._io import atomic_write_text

__all__ = [
    "Policy",
    "OutcomeHistory",
    "TreeTooLargeError",
    "MAX_TREE_DEPTH",
    "TWO_PI",
    "feedback_update",
    "policy_tree_size",
    "enumerate_histories",
    "save_policy",
    "load_policy",
]

TWO_PI = 2.0 * math.pi

# Exhaustive tree operations allocate O(2^N); refuse beyond this depth.
MAX_TREE_DEPTH = 26


class TreeTooLargeError(RuntimeError):
    """Raised when an exhaustive tree operation would exceed the depth guard."""


def check_tree_depth(n_photons: int) -> None:
    if n_photons > MAX_TREE_DEPTH:
        raise TreeTooLargeError(
            f"exhaustive enumeration of 2^{n_photons} outcome strings exceeds "
            f"the depth guard (max {MAX_TREE_DEPTH})"
        )


@dataclass(frozen=True)
class Policy:
    """Vector of feedback increments, one per photon, each in [0, 2pi).

    Entries are wrapped into [0, 2pi) on construction; the update rule
    is 2pi-periodic, so wrapping loses nothing and keeps the search box
    of the optimizer bounded.
    """

    deltas: np.ndarray = field(repr=False)

    def __post_init__(self):
        deltas = np.array(self.deltas, dtype=float, copy=True)
        if deltas.ndim != 1 or deltas.size == 0:
            raise ValueError(f"deltas must be a non-empty 1-D vector, got shape {deltas.shape}")
        if not np.all(np.isfinite(deltas)):
            raise ValueError("deltas must be finite")
        deltas = np.mod(deltas, TWO_PI)
        deltas.flags.writeable = False
        object.__setattr__(self, "deltas", deltas)

    def __len__(self) -> int:
        return self.deltas.size

    @property
    def n_photons(self) -> int:
        return self.deltas.size


@dataclass(frozen=True)
class OutcomeHistory:
    """One root-to-leaf branch: detector bits and the control-phase trajectory.

    ``phases[m]`` is the control phase before the (m+1)-th photon, so
    ``phases`` has one more entry than ``outcomes``, starts at 0, and
    ends at the reported estimate.
    """

    outcomes: tuple[int, ...]
    phases: tuple[float, ...]

    def __post_init__(self):
        if any(x not in (0, 1) for x in self.outcomes):
            raise ValueError(f"outcomes must be bits, got {self.outcomes}")
        if len(self.phases) != len(self.outcomes) + 1:
            raise ValueError(
                f"expected {len(self.outcomes) + 1} phases for "
                f"{len(self.outcomes)} outcomes, got {len(self.phases)}"
            )
        if self.phases[0] != 0.0:
            raise ValueError(f"trajectory must start at control phase 0, got {self.phases[0]}")

    @property
    def estimate(self) -> float:
        return self.phases[-1]


def feedback_update(control_prev: float, x: int, delta: float) -> float:
    """Move the control phase by ``delta`` away from or toward the outcome.

    Returns ``(control_prev - (-1)**x * delta) mod 2pi``: outcome 1
    advances the phase by ``delta``, outcome 0 retreats by ``delta``.
    """
    if x not in (0, 1):
        raise ValueError(f"outcome must be a bit, got {x}")
    sign = 1.0 if x else -1.0
    return (control_prev + sign * delta) % TWO_PI


def policy_tree_size(d: int, bundle: int, depth: int) -> int:
    """Number of branches of the full decision tree, in exact integers.

    For ``depth`` measurements of bundles of ``bundle`` d-level
    particles each, the tree has ``sum_{m=1..depth} (d**bundle)**m =
    d**bundle * (d**(bundle*depth) - 1) / (d**bundle - 1)`` branches.
    Arbitrary-precision integers keep this exact at any size.
    """
    if d < 2:
        raise ValueError(f"particle dimension must be >= 2, got {d}")
    if bundle < 1:
        raise ValueError(f"bundle size must be >= 1, got {bundle}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    base = d**bundle
    return base * (base**depth - 1) // (base - 1)


def enumerate_histories(policy: Policy) -> Iterator[OutcomeHistory]:
    """Yield every outcome string of length N with its phase trajectory.

    Outcome strings are yielded in lexicographic order with the first
    photon's bit most significant.  Guarded at N <= 26.
    """
    n = policy.n_photons
    check_tree_depth(n)
    deltas = policy.deltas
    for index in range(1 << n):
        outcomes = tuple((index >> (n - 1 - m)) & 1 for m in range(n))
        phases = [0.0]
        for m, x in enumerate(outcomes):
            phases.append(feedback_update(phases[-1], x, deltas[m]))
        yield OutcomeHistory(outcomes, tuple(phases))


def _policy_payload(policy: Policy, meta: Mapping | None) -> dict:
    payload = {
        "n": policy.n_photons,
        "deltas": [float(d) for d in policy.deltas],
        "meta": dict(meta) if meta else {},
    }
    for key in ("seed", "generations", "objective"):
        payload["meta"].setdefault(key, None)
    return payload


def save_policy(policy: Policy, path, meta: Mapping | None = None) -> None:
    """Write a policy JSON file ``{"n", "deltas", "meta"}`` atomically.

    Floats are serialized with shortest round-trip repr, so reading the
    file back reproduces the deltas bit for bit.
    """
    atomic_write_text(path, json.dumps(_policy_payload(policy, meta), indent=2) + "\n")


def load_policy(path) -> tuple[Policy, dict]:
    """Read a policy JSON file; returns the policy and its meta dict."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    try:
        n = int(payload["n"])
        deltas = np.asarray(payload["deltas"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed policy file {path}: {exc}") from exc
    if deltas.shape != (n,):
        raise ValueError(
            f"policy file {path} declares n = {n} but carries {deltas.size} deltas"
        )
    return Policy(deltas), dict(payload.get("meta", {}))
