"""Tests for the hard-core spin model and the sampling error it leaves."""

import math

import numpy as np
import pytest
from loguru import logger

from spinsampling.bosondyn import config_amplitudes, evolve_full, full_hamiltonian
from spinsampling.errors import DegeneratePostselectionError, SectorError
from spinsampling.fockspace import embedding, enumerate_sector
from spinsampling.haar import from_matrix, sample_haar_unitary, trial_seed
from spinsampling.models import ProductFormState, SectorKind, SpinState
from spinsampling.spindyn import (
    POSTSELECTION_FLOOR, POSTSELECTION_WARN, backscatter_weight, build_spin_hamiltonian,
    delta_equation_residual, delta_trace, evolve_spin,
    initial_spin_state, pair_to_hcb_block, postselect_success, sampling_error_delta,
    spin_output_distribution
)


class TestSpinHamiltonian:

    def test_hermitian(self, haar4, hcb_basis_4_2):
        h = build_spin_hamiltonian(haar4, hcb_basis_4_2)
        assert h.hermiticity_defect() <= 1e-14

    def test_row_sparsity(self, haar4, hcb_basis_4_2):
        """Each config reaches at most N * M others by a forward or backward hop."""
        h = build_spin_hamiltonian(haar4, hcb_basis_4_2)
        assert h.max_row_nonzeros() <= 2 * 4

    def test_hop_amplitude(self, haar4, hcb_basis_4_2):
        h = build_spin_hamiltonian(haar4, hcb_basis_4_2).matrix.toarray()
        src = hcb_basis_4_2.position((1, 1, 0, 0, 0, 0, 0, 0))
        dst = hcb_basis_4_2.position((0, 1, 0, 0, 0, 0, 1, 0))
        assert h[dst, src] == pytest.approx(haar4.entries[2, 0])
        assert h[src, dst] == pytest.approx(np.conj(haar4.entries[2, 0]))

    def test_is_projection_of_boson_hamiltonian(self, haar4, hcb_basis_4_2):
        full = enumerate_sector(4, 2, SectorKind.FULL)
        rows = embedding(full, hcb_basis_4_2)
        projected = full_hamiltonian(haar4, 2).toarray()[np.ix_(rows, rows)]
        spin = build_spin_hamiltonian(haar4, hcb_basis_4_2).matrix.toarray()
        assert np.allclose(projected, spin)

    def test_rejects_full_basis(self, haar4):
        with pytest.raises(SectorError):
            build_spin_hamiltonian(haar4, enumerate_sector(4, 2, SectorKind.FULL))


class TestEvolution:

    def test_initial_state(self, hcb_basis_4_2):
        psi = initial_spin_state(hcb_basis_4_2)
        assert psi.amplitudes[0] == 1.0
        assert psi.norm == pytest.approx(1.0)

    @pytest.mark.parametrize("t", [0.3, math.pi / 2, 3.0])
    def test_norm_conserved(self, haar6, t):
        assert evolve_spin(haar6, 3, t).norm == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("m", [2, 8, 16])
    @pytest.mark.parametrize("t", [0.0, 0.7, math.pi / 2])
    def test_single_excitation_matches_boson(self, m, t):
        r = sample_haar_unitary(m, seed=trial_seed(21, m))
        _, norm = sampling_error_delta(r, 1, t)
        assert norm <= 1e-10

    def test_real_tridiagonal_coupling_single_excitation(self):
        c, s = math.cos(0.4), math.sin(0.4)
        r = from_matrix([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        _, norm = sampling_error_delta(r, 1, 1.1)
        assert norm <= 1e-10

    def test_delta_vanishes_faster_than_linear(self, haar4):
        """Bunching starts at second order, so delta(t) vanishes faster than t."""
        _, small = sampling_error_delta(haar4, 2, 0.01)
        _, smaller = sampling_error_delta(haar4, 2, 0.005)
        assert small <= 1e-3
        assert smaller < small

    def test_delta_against_full_sector_oracle(self, haar4):
        """Q phi from the oracle and from permanents give the same delta."""
        t = 0.9
        hcb = enumerate_sector(4, 2, SectorKind.HCB)
        exact = evolve_full(haar4, 2, t)
        q_phi = exact.amplitudes[embedding(exact.basis, hcb)]
        delta, norm = sampling_error_delta(haar4, 2, t)
        psi = evolve_spin(haar4, 2, t)
        assert np.allclose(delta, q_phi - psi.amplitudes, atol=1e-9)
        assert norm == pytest.approx(np.linalg.norm(q_phi - psi.amplitudes), abs=1e-9)


class TestDelta:

    def test_trace_starts_at_zero(self, haar4):
        trace = delta_trace(haar4, 2, [0.0, 0.5, 1.0])
        assert trace[0] == (0.0, 0.0)
        assert [t for t, _ in trace] == [0.0, 0.5, 1.0]

    def test_trace_matches_pointwise(self, haar6):
        times = [0.4, math.pi / 2]
        trace = delta_trace(haar6, 2, times)
        for (t, norm) in trace:
            assert norm == pytest.approx(sampling_error_delta(haar6, 2, t)[1], abs=1e-9)

    def test_pair_block_entries(self):
        r = sample_haar_unitary(3, seed=trial_seed(2, 0))
        hcb = enumerate_sector(3, 2, SectorKind.HCB)
        pair = enumerate_sector(3, 2, SectorKind.ONE_B_PAIR)
        block = pair_to_hcb_block(r, 2).toarray()
        assert block.shape == (hcb.dim, pair.dim)
        dst = hcb.position((1, 0, 0, 1, 0, 0))
        src = pair.position((0, 0, 0, 2, 0, 0))
        assert block[dst, src] == pytest.approx(math.sqrt(2.0) * np.conj(r.entries[0, 0]))

    @pytest.mark.parametrize("m,n", [(4, 2), (5, 3)])
    def test_delta_obeys_driven_equation(self, m, n):
        """i d(delta)/dt = Q H Q delta + Q H eps."""
        r = sample_haar_unitary(m, seed=trial_seed(31, m))
        residuals = delta_equation_residual(r, n, [0.2, 0.8, math.pi / 2 - 0.01])
        assert np.all(residuals <= 1e-6)

    def test_pair_source_vanishes_at_time_zero(self, haar4):
        pair = enumerate_sector(4, 2, SectorKind.ONE_B_PAIR)
        amplitudes = config_amplitudes(ProductFormState(r=haar4, n=2, t=0.0), pair)
        assert np.allclose(pair_to_hcb_block(haar4, 2) @ amplitudes, 0.0)


class TestPostselection:

    def test_success_and_backscatter_partition_the_norm(self, haar6):
        psi = evolve_spin(haar6, 2, math.pi / 2)
        assert postselect_success(psi, 2) + backscatter_weight(psi, 2) == pytest.approx(1.0, abs=1e-10)

    def test_distribution_is_renormalised(self, haar6):
        psi = evolve_spin(haar6, 2, math.pi / 2)
        table = spin_output_distribution(psi, 2)
        assert len(table) == math.comb(6, 2)
        assert table.total == pytest.approx(1.0)
        assert all(len(label) == 6 for label in table.labels)

    def test_single_excitation_distribution_is_column_moduli(self, haar4):
        psi = evolve_spin(haar4, 1, math.pi / 2)
        table = spin_output_distribution(psi, 1)
        assert np.allclose([table.get(label) for label in ("1000", "0100", "0010", "0001")],
                           np.abs(haar4.entries[:, 0]) ** 2)

    def test_nothing_transferred_at_time_zero(self, haar4):
        psi = evolve_spin(haar4, 2, 0.0)
        assert postselect_success(psi, 2) == 0.0
        with pytest.raises(DegeneratePostselectionError):
            spin_output_distribution(psi, 2)

    def test_small_success_is_renormalised_with_a_warning(self):
        basis = enumerate_sector(2, 1, SectorKind.HCB)
        weight = POSTSELECTION_WARN / 10
        amplitudes = np.array([math.sqrt(1.0 - weight), 0.0, math.sqrt(weight), 0.0])
        messages = []
        sink = logger.add(messages.append, level="WARNING")
        try:
            table = spin_output_distribution(SpinState(basis=basis, amplitudes=amplitudes), 1)
        finally:
            logger.remove(sink)
        assert table.as_dict() == pytest.approx({"10": 1.0, "01": 0.0})
        assert any("[POSTSELECT]" in str(message) for message in messages)

    def test_warning_threshold_sits_above_the_floor(self):
        assert POSTSELECTION_FLOOR < POSTSELECTION_WARN
