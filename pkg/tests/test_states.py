"""Tests for symmetric-basis states and the rotation-matrix table."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from oracles import rotation_element_factorial, rotation_matrix_expm  # noqa: E402

from phaselearn import (
    SymmetricState,
    WignerDTable,
    product_state,
    sine_state,
    wigner_d_half_pi,
)
from phaselearn.states import renormalized, sine_state_prenorm

HALF_PI = math.pi / 2.0

# Sine-state amplitudes at N = 10 computed once with 40-digit arithmetic
# (exact edge elements plus the same three-term recursion in rationals,
# run through mpmath); the amplitudes are purely imaginary and mirror
# symmetric around the middle of the basis.
SINE_10_IMAG_HALF = [
    0.0008052642102760027812664095,
    0.01712892745561903477298879,
    0.09682525336961256972017005,
    0.2768760092279994629300365,
    0.4905346286037938609240498,
    0.5882963120030532652176901,
]
SINE_10_IMAG = SINE_10_IMAG_HALF + SINE_10_IMAG_HALF[-2::-1]


class TestRotationElements:
    def test_spin_zero_is_unity(self):
        assert wigner_d_half_pi(0, 0, 0) == pytest.approx(1.0, abs=1e-15)

    def test_spin_half_block(self):
        c = math.cos(HALF_PI / 2.0)
        expected = np.array([[c, c], [-c, c]])
        got = np.array(
            [[wigner_d_half_pi(1, m, mp) for mp in (-1, 1)] for m in (-1, 1)]
        )
        np.testing.assert_allclose(got, expected, atol=1e-15)

    def test_matches_factorial_sum_small_j(self):
        for two_j in range(0, 11):
            table = WignerDTable.build(two_j)
            for i in range(two_j + 1):
                for ip in range(two_j + 1):
                    two_m = -two_j + 2 * i
                    two_mp = -two_j + 2 * ip
                    ref = rotation_element_factorial(two_j, two_m, two_mp, HALF_PI)
                    assert table.entries[i, ip] == pytest.approx(ref, abs=1e-12)

    @pytest.mark.parametrize("two_j", [4, 7, 16, 21])
    def test_matches_matrix_exponential(self, two_j):
        ref = rotation_matrix_expm(two_j, HALF_PI)
        got = WignerDTable.build(two_j).entries
        np.testing.assert_allclose(got, ref, atol=1e-11)

    @pytest.mark.parametrize("two_j", [1, 2, 3, 10, 33, 64, 100])
    def test_rows_and_columns_orthonormal(self, two_j):
        entries = WignerDTable.build(two_j).entries
        identity = np.eye(two_j + 1)
        assert np.abs(entries @ entries.T - identity).max() < 1e-10
        assert np.abs(entries.T @ entries - identity).max() < 1e-10

    def test_element_accessor_agrees_with_single_element(self):
        table = WignerDTable.build(9)
        for two_m, two_mp in [(-9, -9), (-1, 3), (9, -5), (5, 5)]:
            assert table.element(two_m, two_mp) == wigner_d_half_pi(9, two_m, two_mp)

    def test_rejects_out_of_range_indices(self):
        table = WignerDTable.build(4)
        with pytest.raises(ValueError):
            table.element(6, 0)
        with pytest.raises(ValueError):
            wigner_d_half_pi(4, 0, -6)

    def test_rejects_parity_mismatch(self):
        # Half-integer m against integer j.
        with pytest.raises(ValueError):
            wigner_d_half_pi(4, 1, 0)
        with pytest.raises(ValueError):
            WignerDTable.build(3).element(0, 1)

    def test_rejects_negative_spin(self):
        with pytest.raises(ValueError):
            WignerDTable.build(-2)


class TestSineState:
    def test_single_photon_closed_form(self):
        state = sine_state(1)
        expected = np.array([0.5 + 0.5j, 0.5 + 0.5j])
        np.testing.assert_allclose(state.amps, expected, atol=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 20, 41])
    def test_unit_norm(self, n):
        assert sine_state(n).norm == pytest.approx(1.0, abs=1e-14)

    def test_ten_photon_amplitudes_match_high_precision_reference(self):
        amps = sine_state(10).amps
        np.testing.assert_allclose(amps.real, np.zeros(11), atol=1e-12)
        np.testing.assert_allclose(amps.imag, SINE_10_IMAG, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 10, 25, 50, 100])
    def test_construction_is_self_normalizing(self, n):
        assert abs(sine_state_prenorm(n) - 1.0) < 1e-6

    def test_rejects_non_positive_photon_count(self):
        with pytest.raises(ValueError):
            sine_state(0)


class TestProductState:
    @pytest.mark.parametrize("n", [1, 2, 5, 12])
    def test_is_basis_vector_with_all_photons_in_one_mode(self, n):
        state = product_state(n)
        expected = np.zeros(n + 1, dtype=complex)
        expected[n] = 1.0
        np.testing.assert_array_equal(state.amps, expected)
        assert state.photons == n

    def test_rejects_non_positive_photon_count(self):
        with pytest.raises(ValueError):
            product_state(0)


class TestSymmetricState:
    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            SymmetricState(2, np.array([1.0, 0.0]))

    def test_rejects_non_unit_norm(self):
        with pytest.raises(ValueError):
            SymmetricState(1, np.array([1.0, 1.0]))

    def test_amps_are_immutable(self):
        state = product_state(3)
        with pytest.raises(ValueError):
            state.amps[0] = 1.0

    def test_copies_caller_array(self):
        source = np.array([1.0 + 0j, 0.0])
        state = SymmetricState(1, source)
        source[0] = 123.0
        assert state.amps[0] == 1.0 + 0j

    def test_renormalized_scales_to_unit_norm(self):
        state = renormalized(2, np.array([3.0, 0.0, 4.0j]))
        np.testing.assert_allclose(state.amps, [0.6, 0.0, 0.8j], atol=1e-15)

    def test_renormalized_rejects_vanishing_norm(self):
        with pytest.raises(ValueError):
            renormalized(1, np.array([0.0, 1e-200]))
