"""
Exact boson-sampling dynamics.

H_BS = sum_ij b_j^+ R_ji a_i + h.c. on 2M modes (the omega term is a global
phase at fixed N and is dropped; coupling 1 so t = pi/2 is the transfer time).
From phi(0) = a_1^+ ... a_N^+ |0> the state stays in product form at all times:

    phi(t) = prod_{k=1..N} (cos t a_k^+ - i sin t sum_j R_jk b_j^+) |0>

so every amplitude is a permanent. The product form carries R itself, the
sign/conjugation convention of the Hamiltonian above; test_bosondyn pins it
against the matrix-exponential oracle `evolve_full`.
"""

import itertools
import math
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import InvalidDimensionError, SectorError
from .fockspace import DEFAULT_CAPACITY, enumerate_sector, hop_pattern, initial_config
from .linalg import DENSE_LIMIT, Propagator
from .models import (
    BosonState, ModeUnitary, OccupationConfig, ProbabilityTable,
    ProductFormState, SectorBasis, SectorKind, occupation_label
)

MAX_PERMANENT_DIM = 20


# =============================================================================
# PERMANENTS
# =============================================================================

def _check_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidDimensionError(f"permanent needs a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_PERMANENT_DIM:
        raise InvalidDimensionError(
            f"permanent of a {a.shape[0]}x{a.shape[0]} matrix exceeds the {MAX_PERMANENT_DIM}x{MAX_PERMANENT_DIM} cap"
        )
    return a


def permanent(a) -> complex:
    """Per(A) by Ryser's formula, visiting column subsets in Gray-code order.

    Per(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij; each Gray step
    adds or removes one column from the running row sums.
    """
    a = _check_square(a)
    n = a.shape[0]
    if n == 0:
        return complex(1.0)

    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    gray = 0
    for k in range(1, 1 << n):
        column = (k & -k).bit_length() - 1
        gray ^= 1 << column
        if gray >> column & 1:
            row_sums += a[:, column]
        else:
            row_sums -= a[:, column]
        term = np.prod(row_sums)
        total += -term if bin(gray).count("1") & 1 else term
    return complex(total * (-1) ** n)


def permanent_batch(mats: np.ndarray) -> np.ndarray:
    """Ryser/Gray permanents of a stack of k x k matrices, shape (K, k, k) -> (K,)."""
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise InvalidDimensionError(f"expected a (K, k, k) stack, got shape {mats.shape}")
    count, k = mats.shape[0], mats.shape[1]
    if k > MAX_PERMANENT_DIM:
        raise InvalidDimensionError(f"permanent dimension {k} exceeds the {MAX_PERMANENT_DIM} cap")
    if k == 0:
        return np.ones(count, dtype=complex)

    row_sums = np.zeros((count, k), dtype=complex)
    total = np.zeros(count, dtype=complex)
    gray = 0
    for step in range(1, 1 << k):
        column = (step & -step).bit_length() - 1
        gray ^= 1 << column
        if gray >> column & 1:
            row_sums += mats[:, :, column]
        else:
            row_sums -= mats[:, :, column]
        term = np.prod(row_sums, axis=1)
        if bin(gray).count("1") & 1:
            total -= term
        else:
            total += term
    return total * (-1) ** k


def naive_permanent(a) -> complex:
    """Sum over permutations; O(n! n) reference for small matrices."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidDimensionError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    rows = np.arange(n)
    return complex(sum(np.prod(a[rows, list(perm)]) for perm in itertools.permutations(range(n))))


# =============================================================================
# PRODUCT-FORM AMPLITUDES
# =============================================================================

def _normalise_configs(configs, modes: int) -> np.ndarray:
    if isinstance(configs, SectorBasis):
        return configs.configs
    if isinstance(configs, OccupationConfig):
        configs = [configs.occupations]
    return np.asarray(configs, dtype=np.int64).reshape(-1, modes)


def config_amplitudes(state: ProductFormState, configs) -> np.ndarray:
    """<config|phi(t)> for every row of a (K, 2M) occupation array.

    For occupied a-modes S (all among 1..N, each at most once):
        cos(t)^|S| (-i sin t)^(N-|S|) Per(B) / sqrt(prod_j n_j!)
    with B[r, c] = R[j_r, k_c], rows j_r the b-modes repeated n_j times and
    columns k_c the input modes 1..N not in S. Any other config gets 0.
    """
    m, n = state.r.m, state.n
    occ = _normalise_configs(configs, 2 * m).astype(np.int64)
    amplitudes = np.zeros(occ.shape[0], dtype=complex)
    if occ.shape[0] == 0:
        return amplitudes

    a_part, b_part = occ[:, :m], occ[:, m:]
    valid = (occ.sum(axis=1) == n) & (a_part.max(axis=1, initial=0) <= 1) & (a_part[:, n:].sum(axis=1) == 0)
    if not np.any(valid):
        return amplitudes

    cos_t, sin_t = math.cos(state.t), math.sin(state.t)
    entries = state.r.entries
    stayed = a_part[:, :n].sum(axis=1)
    moved = n - stayed
    log_fact = np.array([math.lgamma(x + 1.0) for x in range(n + 1)])

    for k in np.unique(moved[valid]):
        rows = np.flatnonzero(valid & (moved == k))
        prefactor = cos_t ** (n - k) * (-1j * sin_t) ** k
        if k == 0:
            amplitudes[rows] = prefactor
            continue
        b_rows = b_part[rows]
        out_modes = np.repeat(np.tile(np.arange(m), rows.size), b_rows.ravel()).reshape(rows.size, k)
        free = np.nonzero(1 - a_part[rows, :n])[1].reshape(rows.size, k)
        blocks = entries[out_modes[:, :, None], free[:, None, :]]
        norm = np.exp(-0.5 * log_fact[b_rows].sum(axis=1))
        amplitudes[rows] = prefactor * permanent_batch(blocks) * norm
    return amplitudes


def amplitude(state: ProductFormState, config: Union[OccupationConfig, Sequence[int]]) -> complex:
    """<config|phi(t)> for a single occupation config (zero outside the reachable set)."""
    occupations = config.occupations if isinstance(config, OccupationConfig) else tuple(config)
    if len(occupations) != 2 * state.r.m:
        raise InvalidDimensionError(
            f"config has {len(occupations)} modes, expected {2 * state.r.m}"
        )
    return complex(config_amplitudes(state, [occupations])[0])


def assemble_state(state: ProductFormState, basis: SectorBasis) -> BosonState:
    """phi(t) evaluated config-by-config on a basis."""
    return BosonState(basis=basis, amplitudes=config_amplitudes(state, basis))


def sector_weight(state: ProductFormState, basis: SectorBasis) -> float:
    """||Q phi||^2 (hcb) or ||P_1bpair phi||^2 (one-b-pair)."""
    if basis.kind not in (SectorKind.HCB, SectorKind.ONE_B_PAIR):
        raise SectorError(f"sector_weight needs an hcb or one-b-pair basis, got {basis.kind.value}")
    probabilities = np.abs(config_amplitudes(state, basis)) ** 2
    return math.fsum(probabilities.tolist())


def epsilon_weight(state: ProductFormState, hcb_basis: SectorBasis) -> float:
    """||eps||^2 = 1 - ||Q phi||^2 (phi is normalised)."""
    return max(0.0, 1.0 - sector_weight(state, hcb_basis))


def final_state_amplitude(r: ModeUnitary, n: int, config: Union[OccupationConfig, Sequence[int]]) -> complex:
    """Amplitude of phi(pi/2) = (-i)^N prod_k sum_j R_jk b_j^+ |0>; exactly 0 off the b-modes."""
    occupations = config.occupations if isinstance(config, OccupationConfig) else tuple(config)
    if any(occupations[:r.m]):
        return 0j
    b_part = occupations[r.m:]
    if sum(b_part) != n:
        return 0j
    out_modes = [j for j, count in enumerate(b_part) for _ in range(count)]
    block = r.entries[np.ix_(out_modes, list(range(n)))]
    norm = math.sqrt(math.prod(math.factorial(c) for c in b_part))
    return complex((-1j) ** n * permanent(block) / norm)


def output_distribution(
    r: ModeUnitary,
    n: int,
    collision_free: bool = True,
    cap: int = DEFAULT_CAPACITY
) -> ProbabilityTable:
    """Boson output probabilities |gamma_n|^2 at t = pi/2 over b-mode configs.

    collision_free=True keeps configs with n_j <= 1 and renormalises over them
    (the postselected boson sampling distribution); otherwise every output
    config is listed with its raw probability.
    """
    kind = SectorKind.HCB if collision_free else SectorKind.FULL
    basis = enumerate_sector(r.m, n, kind, cap=cap)
    rows = basis.out_only_rows()
    configs = basis.configs[rows]
    probabilities = np.abs(config_amplitudes(ProductFormState(r=r, n=n, t=math.pi / 2), configs)) ** 2
    if collision_free:
        total = math.fsum(probabilities.tolist())
        if total > 0.0:
            probabilities = probabilities / total
    labels = [occupation_label(row[r.m:]) for row in configs.tolist()]
    return ProbabilityTable(labels=labels, probabilities=probabilities)


def expansion_weights(n: int, t: float) -> np.ndarray:
    """w_k = C(N,k) cos(t)^(2(N-k)) sin(t)^(2k): weight of the k-transferred component."""
    c2, s2 = math.cos(t) ** 2, math.sin(t) ** 2
    return np.array([math.comb(n, k) * c2 ** (n - k) * s2 ** k for k in range(n + 1)])


# =============================================================================
# CANONICAL MODES
# =============================================================================

def canonical_modes(r: ModeUnitary) -> np.ndarray:
    """Row j holds the coefficients of c_j^+ = sum_i R_ji a_i^+ over the a_i^+."""
    return np.array(r.entries)


def canonical_mode_commutators(r: ModeUnitary) -> np.ndarray:
    """[c_m, c_n^+] = sum_i R*_mi R_ni; the identity exactly when R is unitary."""
    coefficients = canonical_modes(r)
    return coefficients.conj() @ coefficients.T


# =============================================================================
# MATRIX-EXPONENTIAL ORACLE
# =============================================================================

def full_hamiltonian(r: ModeUnitary, n: int, cap: int = DEFAULT_CAPACITY) -> sp.csr_matrix:
    """Sparse H_BS on the full N-particle sector, including sqrt(occupation) factors."""
    basis = enumerate_sector(r.m, n, SectorKind.FULL, cap=cap)
    forward = hop_pattern(basis, basis).matrix(r)
    return (forward + forward.conj().T).tocsr()


def evolve_full(
    r: ModeUnitary,
    n: int,
    t: float,
    cap: int = DEFAULT_CAPACITY,
    dense_limit: int = DENSE_LIMIT
) -> BosonState:
    """exp(-i H_BS t) a_1^+ ... a_N^+ |0> on the full sector (brute-force oracle)."""
    basis = enumerate_sector(r.m, n, SectorKind.FULL, cap=cap)
    initial = np.zeros(basis.dim, dtype=complex)
    initial[basis.position(initial_config(r.m, n))] = 1.0
    propagator = Propagator(full_hamiltonian(r, n, cap=cap), dense_limit=dense_limit)
    return BosonState(basis=basis, amplitudes=propagator.apply(initial, t))


def evolve_full_trace(
    r: ModeUnitary,
    n: int,
    times: Iterable[float],
    cap: int = DEFAULT_CAPACITY,
    dense_limit: int = DENSE_LIMIT
) -> list:
    """evolve_full at several times, reusing one propagator."""
    basis = enumerate_sector(r.m, n, SectorKind.FULL, cap=cap)
    initial = np.zeros(basis.dim, dtype=complex)
    initial[basis.position(initial_config(r.m, n))] = 1.0
    propagator = Propagator(full_hamiltonian(r, n, cap=cap), dense_limit=dense_limit)
    return [BosonState(basis=basis, amplitudes=propagator.apply(initial, t)) for t in times]


def single_particle_spectrum(r: ModeUnitary) -> np.ndarray:
    """Eigenvalues of the N=1 block of H_BS: +1 and -1, each M times."""
    return np.linalg.eigvalsh(full_hamiltonian(r, 1).toarray())


def oracle_difference(r: ModeUnitary, n: int, t: float, cap: int = DEFAULT_CAPACITY) -> float:
    """||assembled phi(t) - evolve_full(t)||_2 on the full sector."""
    exact = evolve_full(r, n, t, cap=cap)
    assembled = assemble_state(ProductFormState(r=r, n=n, t=t), exact.basis)
    return float(np.linalg.norm(assembled.amplitudes - exact.amplitudes))
