"""
Spin-sampling dynamics: H = Q H_BS Q on the hard-core (hcb) sector.

The spin model moves one excitation from an occupied in-site i to an empty
out-site j with amplitude R_ji (plus h.c.), exactly the hop structure of
H_BS restricted to configs with at most one particle per mode.
"""

import math
from typing import Iterable, List, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger

from .bosondyn import config_amplitudes
from .errors import DegeneratePostselectionError, SectorError
from .fockspace import DEFAULT_CAPACITY, enumerate_sector, hop_pattern, initial_config
from .linalg import DENSE_LIMIT, KRYLOV_TOLERANCE, Propagator
from .models import (
    ModeUnitary, ProbabilityTable, ProductFormState, SectorBasis, SectorKind,
    SpinHamiltonian, SpinState, occupation_label
)

# Postselected weight below this cannot be renormalised.
POSTSELECTION_FLOOR = 1e-12

# Postselected weight below this is renormalised but logged.
POSTSELECTION_WARN = 1e-3

# Central-difference step for the delta equation check.
FD_STEP = 1e-4


def build_spin_hamiltonian(r: ModeUnitary, basis: SectorBasis) -> SpinHamiltonian:
    """H_ji = R_ji for the move in_i -> out_j, conjugate for the reverse move."""
    if basis.kind != SectorKind.HCB:
        raise SectorError(f"spin Hamiltonian needs an hcb basis, got {basis.kind.value}")
    forward = hop_pattern(basis, basis).matrix(r)
    matrix = (forward + forward.conj().T).tocsr()
    return SpinHamiltonian(basis=basis, matrix=matrix)


def initial_spin_state(basis: SectorBasis) -> SpinState:
    """In-sites 1..N excited, everything else down."""
    amplitudes = np.zeros(basis.dim, dtype=complex)
    amplitudes[basis.position(initial_config(basis.m, basis.n))] = 1.0
    return SpinState(basis=basis, amplitudes=amplitudes)


def propagate(
    h: SpinHamiltonian,
    initial: SpinState,
    t: float,
    dense_limit: int = DENSE_LIMIT,
    tol: float = KRYLOV_TOLERANCE
) -> SpinState:
    """exp(-iHt)|initial>."""
    propagator = Propagator(h.matrix, dense_limit=dense_limit, tol=tol)
    return SpinState(basis=initial.basis, amplitudes=propagator.apply(initial.amplitudes, t))


def evolve_spin(r: ModeUnitary, n: int, t: float, cap: int = DEFAULT_CAPACITY) -> SpinState:
    """psi(t) from in-sites 1..N excited, on a fresh hcb basis."""
    basis = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
    return propagate(build_spin_hamiltonian(r, basis), initial_spin_state(basis), t)


def sampling_error_delta(
    r: ModeUnitary,
    n: int,
    t: float,
    cap: int = DEFAULT_CAPACITY
) -> Tuple[np.ndarray, float]:
    """delta(t) = Q phi(t) - psi(t) on the hcb basis, and its 2-norm."""
    basis = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
    psi = propagate(build_spin_hamiltonian(r, basis), initial_spin_state(basis), t)
    q_phi = config_amplitudes(ProductFormState(r=r, n=n, t=t), basis)
    delta = q_phi - psi.amplitudes
    return delta, float(np.linalg.norm(delta))


def delta_trace(
    r: ModeUnitary,
    n: int,
    times: Iterable[float],
    cap: int = DEFAULT_CAPACITY
) -> List[Tuple[float, float]]:
    """(t, ||delta(t)||) pairs, sharing one Hamiltonian and propagator."""
    basis = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
    h = build_spin_hamiltonian(r, basis)
    propagator = Propagator(h.matrix)
    start = initial_spin_state(basis).amplitudes

    trace = []
    for t in times:
        psi = propagator.apply(start, float(t))
        q_phi = config_amplitudes(ProductFormState(r=r, n=n, t=float(t)), basis)
        trace.append((float(t), float(np.linalg.norm(q_phi - psi))))
    return trace


def pair_to_hcb_block(r: ModeUnitary, n: int, cap: int = DEFAULT_CAPACITY) -> sp.csr_matrix:
    """Q H_BS P_1bpair as an (hcb x one-b-pair) sparse matrix.

    Only b_j R*_ji a_i^+ can take a bunched pair back into the hcb sector;
    un-bunching a doubly occupied b-mode carries the sqrt(2) factor.
    """
    hcb = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
    pair = enumerate_sector(r.m, n, SectorKind.ONE_B_PAIR, cap=cap)
    into_pair = hop_pattern(hcb, pair).matrix(r)
    return into_pair.conj().T.tocsr()


def delta_equation_residual(
    r: ModeUnitary,
    n: int,
    times: Iterable[float],
    cap: int = DEFAULT_CAPACITY,
    step: float = FD_STEP
) -> np.ndarray:
    """|| i d(delta)/dt - Q H Q delta - Q H eps || at each time, by central differences.

    Q H eps only sees the one-b-pair part of eps, so it is evaluated as
    (Q H_BS P_1bpair) P_1bpair phi.
    """
    hcb = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
    pair = enumerate_sector(r.m, n, SectorKind.ONE_B_PAIR, cap=cap)
    h = build_spin_hamiltonian(r, hcb)
    block = pair_to_hcb_block(r, n, cap=cap)
    propagator = Propagator(h.matrix)
    start = initial_spin_state(hcb).amplitudes

    def delta_at(t: float) -> np.ndarray:
        q_phi = config_amplitudes(ProductFormState(r=r, n=n, t=t), hcb)
        return q_phi - propagator.apply(start, t)

    residuals = []
    for t in times:
        t = float(t)
        derivative = (delta_at(t + step) - delta_at(t - step)) / (2.0 * step)
        pair_phi = config_amplitudes(ProductFormState(r=r, n=n, t=t), pair)
        rhs = h.matrix @ delta_at(t) + block @ pair_phi
        residuals.append(float(np.linalg.norm(1j * derivative - rhs)))
    return np.array(residuals)


def postselect_success(psi: SpinState, n: int) -> float:
    """P_ok: weight of configs with all N excitations on out-sites."""
    rows = psi.basis.out_only_rows()
    return math.fsum(psi.probabilities()[rows].tolist())


def backscatter_weight(psi: SpinState, n: int) -> float:
    """Weight left on configs with at least one excitation on an in-site."""
    probabilities = psi.probabilities()
    keep = np.ones(psi.basis.dim, dtype=bool)
    keep[psi.basis.out_only_rows()] = False
    return math.fsum(probabilities[keep].tolist())


def spin_output_distribution(psi: SpinState, n: int) -> ProbabilityTable:
    """Out-site configs conditioned on postselection success, labelled by out-site bits."""
    basis = psi.basis
    rows = basis.out_only_rows()
    probabilities = psi.probabilities()[rows]
    total = math.fsum(probabilities.tolist())
    if total < POSTSELECTION_FLOOR:
        raise DegeneratePostselectionError(
            f"postselected weight {total:.3g} is below {POSTSELECTION_FLOOR:g} (n={n}, m={basis.m})"
        )
    if total < POSTSELECTION_WARN:
        logger.warning(f"[POSTSELECT] small success probability {total:.3g} (n={n}, m={basis.m})")
    labels = [occupation_label(row[basis.m:]) for row in basis.configs[rows].tolist()]
    return ProbabilityTable(labels=labels, probabilities=probabilities / total)
