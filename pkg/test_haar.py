"""Tests for Haar sampling of mode unitaries."""

import numpy as np
import pytest

from spinsampling.errors import InvalidDimensionError
from spinsampling.haar import (
    UNITARITY_TOLERANCE, from_matrix, ginibre, make_rng, sample_haar_unitary, trial_seed, unitarity_defect
)
from spinsampling.models import ModeUnitary

HAAR_SAMPLES = 5000


@pytest.fixture(scope="module")
def haar_moduli():
    m = 4
    return m, np.array([np.abs(sample_haar_unitary(m, seed=trial_seed(9, k)).entries) for k in range(HAAR_SAMPLES)])


class TestSampleHaarUnitary:

    @pytest.mark.parametrize("m", [1, 2, 5, 16, 40])
    def test_unitary_within_tolerance(self, m):
        r = sample_haar_unitary(m, seed=trial_seed(3, m))
        assert r.m == m
        assert r.entries.shape == (m, m)
        assert unitarity_defect(r) <= UNITARITY_TOLERANCE

    def test_m_equals_one_is_a_phase(self):
        r = sample_haar_unitary(1, seed=11)
        assert abs(abs(r.entries[0, 0]) - 1.0) <= 1e-12

    def test_same_seed_same_matrix(self):
        a = sample_haar_unitary(6, seed=trial_seed(5, 2))
        b = sample_haar_unitary(6, seed=trial_seed(5, 2))
        assert np.array_equal(a.entries, b.entries)

    def test_trial_streams_differ(self):
        a = sample_haar_unitary(6, seed=trial_seed(5, 0))
        b = sample_haar_unitary(6, seed=trial_seed(5, 1))
        assert not np.allclose(a.entries, b.entries)

    def test_zero_modes_rejected(self):
        with pytest.raises(InvalidDimensionError):
            sample_haar_unitary(0, seed=1)

    def test_entries_are_read_only(self):
        r = sample_haar_unitary(3, seed=1)
        with pytest.raises(ValueError):
            r.entries[0, 0] = 0.0

    def test_mean_squared_modulus_is_one_over_m(self, haar_moduli):
        """Haar columns are uniform on the sphere: E|R_ij|^2 = 1/M."""
        m, moduli = haar_moduli
        squares = moduli ** 2
        standard_error = squares.std(axis=0) / np.sqrt(len(squares))
        assert np.all(np.abs(squares.mean(axis=0) - 1.0 / m) <= 5.0 * standard_error)

    def test_fourth_moment(self, haar_moduli):
        m, moduli = haar_moduli
        fourth = moduli ** 4
        standard_error = fourth.std(axis=0) / np.sqrt(len(fourth))
        assert np.all(np.abs(fourth.mean(axis=0) - 2.0 / (m * (m + 1))) <= 5.0 * standard_error)

    def test_diagonal_phases_are_uniform(self):
        """Householder QR leaves Re(Q_00) < 0; the phase correction removes that bias."""
        corrected, raw = [], []
        for k in range(HAAR_SAMPLES):
            seed = trial_seed(4, k)
            corrected.append(np.angle(sample_haar_unitary(3, seed=seed).entries[0, 0]))
            q, _ = np.linalg.qr(ginibre(3, make_rng(seed)))
            raw.append(np.angle(q[0, 0]))
        tolerance = 5.0 / np.sqrt(2 * HAAR_SAMPLES)
        assert abs(np.mean(np.cos(corrected))) < tolerance
        assert abs(np.mean(np.sin(corrected))) < tolerance
        assert abs(np.mean(np.cos(raw))) > 0.3


class TestHelpers:

    def test_unitarity_defect_of_non_unitary(self):
        assert unitarity_defect(np.array([[1.0, 1.0], [0.0, 1.0]])) == pytest.approx(1.0)

    def test_unitarity_defect_rejects_non_square(self):
        with pytest.raises(InvalidDimensionError):
            unitarity_defect(np.ones((2, 3)))

    def test_from_matrix_wraps_rotation(self):
        c, s = np.cos(0.3), np.sin(0.3)
        r = from_matrix([[c, -s], [s, c]])
        assert r.m == 2
        assert r.is_real
        assert unitarity_defect(r) < 1e-14

    def test_make_rng_tuple_key_is_reproducible(self):
        assert make_rng((1, 2)).random() == make_rng((1, 2)).random()

    def test_json_round_trip(self):
        r = sample_haar_unitary(3, seed=trial_seed(1, 4))
        back = ModeUnitary.from_dict(r.to_dict())
        assert back.seed == (1, 4)
        assert np.array_equal(back.entries, r.entries)
