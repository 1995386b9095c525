"""N-photon two-mode states in the permutation-symmetric basis.

A state of ``R`` indistinguishable photons split over two interferometer
input modes lives in the (R+1)-dimensional symmetric subspace spanned by
``|n, R-n>`` with ``n`` the number of photons in mode a.  This module
builds the two inputs studied here: the entangled sine state, whose
coefficients are a half-period sinusoid rotated by a Wigner small
d-matrix at beta = pi/2, and the non-entangled product state with every
photon in mode a.

The global phase of the sine state follows the literal construction
below (factor ``exp(i*pi*(k-n)/2)``); other conventions differ by a
global phase, which no probability in this package can see.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "SymmetricState",
    "WignerDTable",
    "wigner_d_half_pi",
    "sine_state",
    "product_state",
]

logger = logging.getLogger(__name__)

# Unit-norm tolerance for constructed states.
NORM_ATOL = 1e-12


@dataclass(frozen=True)
class SymmetricState:
    """Pure state of ``photons`` photons in the symmetric two-mode basis.

    Parameters
    ----------
    photons : int
        Remaining photon count R; the zero-photon state is the scalar
        left after a full measurement sequence.
    amps : ndarray of complex, shape (photons + 1,)
        Amplitude of ``|n, R-n>`` at index ``n`` (photons in mode a).
        Must be unit-norm; use `renormalized` to absorb drift.
    """

    photons: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.photons < 0:
            raise ValueError(f"photon count must be >= 0, got {self.photons}")
        amps = np.array(self.amps, dtype=complex, copy=True)
        if amps.shape != (self.photons + 1,):
            raise ValueError(
                f"expected {self.photons + 1} amplitudes for {self.photons} "
                f"photons, got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm {norm!r} is not 1 within {NORM_ATOL}")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def renormalized(photons: int, raw_amps: np.ndarray) -> SymmetricState:
    """Build a `SymmetricState` from unnormalized amplitudes.

    Raises
    ------
    ValueError
        If the raw norm is too small to normalize reliably.
    """
    raw_amps = np.asarray(raw_amps, dtype=complex)
    norm = np.linalg.norm(raw_amps)
    if norm < 1e-150:
        raise ValueError(f"cannot normalize amplitudes with norm {norm!r}")
    return SymmetricState(photons, raw_amps / norm)


# i^p for p mod 4; exact, unlike floating-point complex powers.
_QUARTER_TURNS = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


def _d_matrix(two_j: int) -> np.ndarray:
    """Full d^j(pi/2) from the spectral decomposition of the generator.

    In the ascending-m basis the rotation generator J_y is tridiagonal
    and antisymmetric-imaginary; conjugating by diag(i^k) turns it into
    a real symmetric tridiagonal matrix whose eigendecomposition
    (backward stable) yields exp(-i (pi/2) J_y) as a product of
    near-orthogonal factors.  Row/column orthonormality therefore holds
    to machine precision at any practical j, where edge-seeded
    three-term recursions lose ~10 digits by 2j = 100.
    """
    size = two_j + 1
    if size == 1:
        return np.ones((1, 1))
    j = two_j / 2.0
    ms = -j + np.arange(size - 1)
    off_diagonal = -0.5 * np.sqrt(j * (j + 1.0) - ms * (ms + 1.0))
    eigvals, eigvecs = eigh_tridiagonal(np.zeros(size), off_diagonal)
    core = (eigvecs * np.exp(-0.5j * np.pi * eigvals)) @ eigvecs.T
    k = np.arange(size)
    phase = _QUARTER_TURNS[(k[:, None] - k[None, :]) % 4]
    return (phase * core).real


@dataclass(frozen=True)
class WignerDTable:
    """Wigner small d-matrix d^j(pi/2), indices doubled to stay integral.

    ``entries[i, i']`` holds d^j_{m, m'}(pi/2) with m = -j + i and
    m' = -j + i'.  Rows and columns are orthonormal (the matrix is a
    rotation), which property tests use as the stability witness.
    """

    two_j: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.two_j < 0:
            raise ValueError(f"2j must be >= 0, got {self.two_j}")
        entries = np.asarray(self.entries, dtype=float)
        size = self.two_j + 1
        if entries.shape != (size, size):
            raise ValueError(f"expected shape {(size, size)}, got {entries.shape}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @classmethod
    def build(cls, two_j: int) -> "WignerDTable":
        """Compute the full (2j+1) x (2j+1) table at beta = pi/2."""
        if two_j < 0:
            raise ValueError(f"2j must be >= 0, got {two_j}")
        return cls(two_j, _d_matrix(two_j))

    def element(self, two_m: int, two_m_prime: int) -> float:
        """d^j_{m, m'}(pi/2) for doubled indices ``two_m``, ``two_m_prime``."""
        for name, two_x in (("m", two_m), ("m'", two_m_prime)):
            if abs(two_x) > self.two_j:
                raise ValueError(f"|{name}| exceeds j (2{name} = {two_x}, 2j = {self.two_j})")
            if (two_x - self.two_j) % 2:
                raise ValueError(f"{name} must differ from j by an integer (2{name} = {two_x})")
        return float(self.entries[(two_m + self.two_j) // 2, (two_m_prime + self.two_j) // 2])


def wigner_d_half_pi(two_j: int, two_m: int, two_m_prime: int) -> float:
    """Single element d^j_{m, m'}(pi/2) with half-integers passed doubled.

    Parameters
    ----------
    two_j, two_m, two_m_prime : int
        Doubled indices 2j, 2m, 2m'.  ``|m|, |m'| <= j`` and both must
        differ from j by integers.

    Returns
    -------
    float
        The rotation-matrix element, accurate to machine precision at
        any practical j (spectral construction, no factorials).
    """
    if two_j < 0:
        raise ValueError(f"2j must be >= 0, got {two_j}")
    for name, two_x in (("m", two_m), ("m'", two_m_prime)):
        if abs(two_x) > two_j:
            raise ValueError(f"|{name}| exceeds j (2{name} = {two_x}, 2j = {two_j})")
        if (two_x - two_j) % 2:
            raise ValueError(f"{name} must differ from j by an integer (2{name} = {two_x})")
    matrix = _d_matrix(two_j)
    return float(matrix[(two_m + two_j) // 2, (two_m_prime + two_j) // 2])


def sine_state(n_photons: int) -> SymmetricState:
    """Entangled sine-profile input state of ``n_photons`` photons.

    Amplitudes over the symmetric basis ``|n, N-n>``:

        amps_n = (N/2 + 1)^(-1/2)
                 * sum_k sin((k+1) pi / (N+2)) exp(i pi (k-n)/2)
                 * d^{N/2}_{n-N/2, k-N/2}(pi/2)

    The prefactor is exactly normalizing; the state is renormalized
    anyway to absorb floating-point drift, and the pre-normalization
    norm is logged at DEBUG level as a stability diagnostic.
    """
    if n_photons < 1:
        raise ValueError(f"photon count must be >= 1, got {n_photons}")
    table = WignerDTable.build(n_photons)
    k = np.arange(n_photons + 1)
    envelope = np.sin((k + 1) * np.pi / (n_photons + 2))
    # entries[n, k] = d^{N/2}_{n-N/2, k-N/2}(pi/2): doubled indices 2n-N, 2k-N.
    phases = np.exp(1j * np.pi * (k[None, :] - k[:, None]) / 2.0)
    raw = (phases * table.entries) @ envelope
    raw /= math.sqrt(n_photons / 2.0 + 1.0)
    pre_norm = float(np.linalg.norm(raw))
    logger.debug("sine_state(N=%d) pre-normalization norm %.17g", n_photons, pre_norm)
    return renormalized(n_photons, raw)


def sine_state_prenorm(n_photons: int) -> float:
    """Pre-normalization norm of the sine-state construction.

    Should be 1 up to floating-point error; deviation flags d-matrix
    instability.
    """
    if n_photons < 1:
        raise ValueError(f"photon count must be >= 1, got {n_photons}")
    table = WignerDTable.build(n_photons)
    k = np.arange(n_photons + 1)
    envelope = np.sin((k + 1) * np.pi / (n_photons + 2))
    phases = np.exp(1j * np.pi * (k[None, :] - k[:, None]) / 2.0)
    raw = (phases * table.entries) @ envelope
    raw /= math.sqrt(n_photons / 2.0 + 1.0)
    return float(np.linalg.norm(raw))


def product_state(n_photons: int) -> SymmetricState:
    """Non-entangled input: every photon in mode a, ``|1,0>^(x N)``.

    In the symmetric basis this is the basis vector ``amps_n =
    delta_{n,N}``, and it stays a basis vector under every measurement
    step.
    """
    if n_photons < 1:
        raise ValueError(f"photon count must be >= 1, got {n_photons}")
    amps = np.zeros(n_photons + 1, dtype=complex)
    amps[n_photons] = 1.0
    return SymmetricState(n_photons, amps)
