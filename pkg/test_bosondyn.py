"""Tests for permanents, product-form amplitudes and the matrix-exponential oracle."""

import math

import numpy as np
import pytest

from spinsampling.bosondyn import (
    MAX_PERMANENT_DIM, amplitude, assemble_state, canonical_mode_commutators, canonical_modes,
    config_amplitudes, epsilon_weight, evolve_full, evolve_full_trace, expansion_weights,
    final_state_amplitude, full_hamiltonian, naive_permanent, oracle_difference, output_distribution,
    permanent, permanent_batch, sector_weight, single_particle_spectrum
)
from spinsampling.errors import InvalidDimensionError, SectorError
from spinsampling.fockspace import enumerate_sector, initial_config
from spinsampling.haar import from_matrix, sample_haar_unitary, trial_seed
from spinsampling.models import OccupationConfig, ProductFormState, SectorKind


class TestPermanent:

    def test_empty_matrix(self):
        assert permanent(np.zeros((0, 0))) == 1.0

    def test_two_by_two(self):
        assert permanent([[1, 2], [3, 4]]) == pytest.approx(1 * 4 + 2 * 3)

    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_all_ones_is_factorial(self, n):
        assert permanent(np.ones((n, n))) == pytest.approx(math.factorial(n))

    def test_identity(self):
        assert permanent(np.eye(6)) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_matches_permutation_sum(self, rng, n):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert abs(permanent(a) - naive_permanent(a)) <= 1e-10 * max(1.0, abs(naive_permanent(a)))

    def test_repeated_rows(self, rng):
        row = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        other = rng.standard_normal(3)
        a = np.vstack([row, row, other])
        assert permanent(a) == pytest.approx(naive_permanent(a), abs=1e-12)

    def test_batch_matches_single(self, rng):
        mats = rng.standard_normal((7, 4, 4)) + 1j * rng.standard_normal((7, 4, 4))
        batch = permanent_batch(mats)
        assert np.allclose(batch, [permanent(a) for a in mats])

    def test_batch_of_empty_matrices(self):
        assert np.array_equal(permanent_batch(np.zeros((3, 0, 0))), np.ones(3))

    def test_rejects_non_square(self):
        with pytest.raises(InvalidDimensionError):
            permanent(np.ones((2, 3)))
        with pytest.raises(InvalidDimensionError):
            permanent_batch(np.ones((2, 2, 3)))

    def test_rejects_oversize(self):
        with pytest.raises(InvalidDimensionError):
            permanent(np.eye(MAX_PERMANENT_DIM + 1))


class TestAmplitudes:

    def test_time_zero_is_initial_config(self, haar4):
        state = ProductFormState(r=haar4, n=2, t=0.0)
        assert amplitude(state, initial_config(4, 2)) == pytest.approx(1.0)
        assert amplitude(state, (0, 0, 0, 0, 1, 1, 0, 0)) == pytest.approx(0.0)

    def test_single_particle_transfer(self, haar4):
        """At t = pi/2 one particle sits in b_j with amplitude -i R_j1."""
        state = ProductFormState(r=haar4, n=1, t=math.pi / 2)
        for j in range(4):
            config = [0] * 8
            config[4 + j] = 1
            assert amplitude(state, config) == pytest.approx(-1j * haar4.entries[j, 0])

    def test_single_particle_partial_transfer(self, haar4):
        t = 0.4
        state = ProductFormState(r=haar4, n=1, t=t)
        assert amplitude(state, initial_config(4, 1)) == pytest.approx(math.cos(t))
        assert amplitude(state, (0, 0, 0, 0, 0, 0, 1, 0)) == pytest.approx(-1j * math.sin(t) * haar4.entries[2, 0])

    def test_bunched_output_normalisation(self, haar4):
        """|2_j> carries Per of a repeated-row block divided by sqrt(2!)."""
        state = ProductFormState(r=haar4, n=2, t=math.pi / 2)
        r = haar4.entries
        expected = (-1j) ** 2 * 2 * r[1, 0] * r[1, 1] / math.sqrt(2.0)
        assert amplitude(state, (0, 0, 0, 0, 0, 2, 0, 0)) == pytest.approx(expected)

    def test_unreachable_configs_are_zero(self, haar4):
        state = ProductFormState(r=haar4, n=2, t=0.7)
        assert amplitude(state, (0, 0, 1, 0, 1, 0, 0, 0)) == 0.0
        assert amplitude(state, (2, 0, 0, 0, 0, 0, 0, 0)) == 0.0
        assert amplitude(state, (1, 0, 0, 0, 0, 0, 0, 0)) == 0.0

    def test_wrong_config_length(self, haar4):
        with pytest.raises(InvalidDimensionError):
            amplitude(ProductFormState(r=haar4, n=1, t=0.0), (1, 0, 0))

    @pytest.mark.parametrize("t", [0.0, 0.3, math.pi / 4, math.pi / 2, 2.0])
    def test_full_sector_is_normalised(self, haar4, t):
        basis = enumerate_sector(4, 3, SectorKind.FULL)
        state = assemble_state(ProductFormState(r=haar4, n=3, t=t), basis)
        assert state.norm == pytest.approx(1.0, abs=1e-12)

    def test_final_state_amplitude_matches_product_form(self, haar6):
        state = ProductFormState(r=haar6, n=3, t=math.pi / 2)
        for config in [(0,) * 6 + (1, 1, 1, 0, 0, 0), (0,) * 6 + (0, 2, 0, 0, 1, 0), (1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0)]:
            assert final_state_amplitude(haar6, 3, config) == pytest.approx(amplitude(state, config), abs=1e-14)

    def test_vectorised_matches_single(self, haar4):
        basis = enumerate_sector(4, 3, SectorKind.FULL)
        state = ProductFormState(r=haar4, n=3, t=1.1)
        batch = config_amplitudes(state, basis)
        singles = [amplitude(state, row) for row in basis.configs.tolist()]
        assert np.allclose(batch, singles)


class TestSectorWeights:

    @pytest.mark.parametrize("t", [0.2, math.pi / 4, math.pi / 2])
    def test_two_particles_split_between_hcb_and_pairs(self, haar6, t):
        state = ProductFormState(r=haar6, n=2, t=t)
        hcb = enumerate_sector(6, 2, SectorKind.HCB)
        pair = enumerate_sector(6, 2, SectorKind.ONE_B_PAIR)
        assert sector_weight(state, hcb) + sector_weight(state, pair) == pytest.approx(1.0, abs=1e-12)
        assert epsilon_weight(state, hcb) == pytest.approx(sector_weight(state, pair), abs=1e-12)

    def test_pair_weight_at_transfer_time(self, haar6):
        r = haar6.entries
        state = ProductFormState(r=haar6, n=2, t=math.pi / 2)
        pair = enumerate_sector(6, 2, SectorKind.ONE_B_PAIR)
        expected = sum(2 * abs(r[j, 0]) ** 2 * abs(r[j, 1]) ** 2 for j in range(6))
        assert sector_weight(state, pair) == pytest.approx(expected)

    def test_single_particle_never_bunches(self, haar4):
        state = ProductFormState(r=haar4, n=1, t=1.3)
        assert epsilon_weight(state, enumerate_sector(4, 1, SectorKind.HCB)) == pytest.approx(0.0, abs=1e-14)

    def test_full_basis_rejected(self, haar4):
        with pytest.raises(SectorError):
            sector_weight(ProductFormState(r=haar4, n=2, t=0.5), enumerate_sector(4, 2, SectorKind.FULL))

    @pytest.mark.parametrize("t", [0.0, 0.5, math.pi / 2])
    def test_expansion_weights_sum_to_one(self, t):
        assert math.fsum(expansion_weights(4, t)) == pytest.approx(1.0)

    def test_expansion_weights_endpoints(self):
        assert expansion_weights(3, 0.0)[0] == pytest.approx(1.0)
        assert expansion_weights(3, math.pi / 2)[-1] == pytest.approx(1.0)

    def test_ensemble_hcb_weight_falls_with_time(self):
        basis = enumerate_sector(8, 3, SectorKind.HCB)
        times = np.linspace(0.0, math.pi / 2, 7)
        instances = [sample_haar_unitary(8, seed=trial_seed(71, trial)) for trial in range(60)]
        means = [np.mean([sector_weight(ProductFormState(r=r, n=3, t=float(t)), basis) for r in instances])
                 for t in times]
        assert means[0] == pytest.approx(1.0)
        assert all(b <= a + 1e-12 for a, b in zip(means, means[1:]))
        assert means[-1] == pytest.approx(56 / 120, abs=0.05)


class TestOutputDistribution:

    def test_collision_free_is_renormalised(self, haar6):
        table = output_distribution(haar6, 3)
        assert len(table) == math.comb(6, 3)
        assert table.total == pytest.approx(1.0)

    def test_full_output_sums_to_one(self, haar4):
        table = output_distribution(haar4, 2, collision_free=False)
        assert len(table) == math.comb(4 + 2 - 1, 2)
        assert table.total == pytest.approx(1.0)
        assert "2000" in table.labels

    def test_single_particle_probabilities(self, haar4):
        table = output_distribution(haar4, 1)
        expected = np.abs(haar4.entries[:, 0]) ** 2
        assert np.allclose([table.get(label) for label in ("1000", "0100", "0010", "0001")], expected)


class TestOracle:

    @pytest.mark.parametrize("m,n", [(1, 1), (2, 2), (3, 2), (3, 3)])
    @pytest.mark.parametrize("t", [0.0, math.pi / 4, math.pi / 2, 1.9])
    def test_product_form_matches_matrix_exponential(self, m, n, t):
        r = sample_haar_unitary(m, seed=trial_seed(13, m * 10 + n))
        assert oracle_difference(r, n, t) <= 1e-8

    def test_trace_matches_pointwise(self, haar4):
        times = [0.0, 0.4, 1.2]
        trace = evolve_full_trace(haar4, 2, times)
        for t, state in zip(times, trace):
            assert np.allclose(state.amplitudes, evolve_full(haar4, 2, t).amplitudes, atol=1e-10)

    def test_hamiltonian_is_hermitian(self, haar4):
        h = full_hamiltonian(haar4, 2).toarray()
        assert np.allclose(h, h.conj().T)

    def test_single_particle_spectrum(self, haar4):
        spectrum = single_particle_spectrum(haar4)
        assert np.allclose(spectrum, [-1.0] * 4 + [1.0] * 4, atol=1e-12)

    def test_canonical_modes_commute_canonically(self, haar8):
        assert np.allclose(canonical_mode_commutators(haar8), np.eye(8), atol=1e-12)

    def test_non_unitary_breaks_commutators(self):
        r = from_matrix([[1.0, 0.5], [0.0, 1.0]])
        assert not np.allclose(canonical_mode_commutators(r), np.eye(2))

    def test_single_photon_lands_in_canonical_mode(self, haar4):
        coefficients = canonical_modes(haar4)
        state = ProductFormState(r=haar4, n=1, t=math.pi / 2)
        for j in range(4):
            config = OccupationConfig.from_parts([0] * 4, [1 if k == j else 0 for k in range(4)])
            assert amplitude(state, config) == pytest.approx(-1j * coefficients[j, 0], abs=1e-12)
