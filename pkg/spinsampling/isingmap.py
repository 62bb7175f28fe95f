"""
Transverse-field Ising route to the spin-sampling Hamiltonian.

H_Ising = sum_{a<b} J_ab sx_a sx_b + B sum_a sz_a on 2M sites, with the only
couplings J_{i, M+j} = R_ij between in-site i and out-site j. In the frame
rotating with B sum sz, sx sx keeps its s+ s- + s- s+ part (the s+ s+ terms
rotate at 4B), which is the XY hopping model with in_i -> out_j amplitude
R_ij, i.e. the spin Hamiltonian built from R^T.

Basis conventions: site 0 is the most significant bit of the state index,
|1> is the excited state, sz = diag(-1, +1) on (|0>, |1>), s+ = |1><0|.
"""

import math
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InvalidDimensionError, UnsupportedCouplingError
from .fockspace import enumerate_sector
from .haar import from_matrix, make_rng
from .linalg import expm_hermitian
from .models import IsingModel, ModeUnitary, SectorKind, SeedKey, SpinState
from .spindyn import build_spin_hamiltonian, initial_spin_state, propagate

MAX_ISING_MODES = 5
MAX_ISING_SITES = 2 * MAX_ISING_MODES

ORTHOGONALITY_TOLERANCE = 1e-10

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]])
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]])
SIGMA_MINUS = SIGMA_PLUS.T


def sample_haar_orthogonal(m: int, seed: Optional[SeedKey] = None) -> ModeUnitary:
    """Haar-random real orthogonal matrix: real Ginibre, QR, diagonal signs divided out."""
    if m < 1:
        raise InvalidDimensionError(f"mode count must be >= 1, got {m}")
    rng = make_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    signs = np.sign(np.diagonal(r))
    signs[signs == 0] = 1.0
    return from_matrix(q * signs[np.newaxis, :], seed=seed)


def rotation(theta: float) -> ModeUnitary:
    c, s = math.cos(theta), math.sin(theta)
    return from_matrix([[c, -s], [s, c]])


def build_ising_from_r(r: ModeUnitary, b: float) -> IsingModel:
    """Block-coupled Ising model with J_{i, M+j} = J_{M+j, i} = R_ij."""
    if r.m > MAX_ISING_MODES:
        raise InvalidDimensionError(f"Ising model is limited to m <= {MAX_ISING_MODES}, got m={r.m}")
    if np.max(np.abs(r.entries.imag)) > ORTHOGONALITY_TOLERANCE:
        raise UnsupportedCouplingError(
            "complex R needs sx-sy couplings; only real orthogonal R maps onto sx-sx Ising couplings"
        )
    real = r.entries.real
    defect = float(np.max(np.abs(real.T @ real - np.eye(r.m))))
    if defect > ORTHOGONALITY_TOLERANCE:
        raise UnsupportedCouplingError(f"R is not orthogonal (||R^T R - I||_max = {defect:.3g})")

    m = r.m
    j = np.zeros((2 * m, 2 * m))
    j[:m, m:] = real
    j[m:, :m] = real.T
    return IsingModel(m=m, j=j, b=float(b))


def _check_sites(sites: int) -> None:
    if sites > MAX_ISING_SITES:
        raise InvalidDimensionError(
            f"dense spin-space evolution is limited to {MAX_ISING_SITES} sites, got {sites}"
        )


def site_operator(single: np.ndarray, site: int, sites: int) -> sp.csr_matrix:
    """`single` acting on one site of a `sites`-site register (site 0 leftmost)."""
    left = sp.identity(2 ** site, format="csr")
    right = sp.identity(2 ** (sites - site - 1), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(single)), right, format="csr")


def _pairs(j: np.ndarray) -> Iterable[tuple]:
    sites = j.shape[0]
    for a in range(sites):
        for c in range(a + 1, sites):
            if j[a, c] != 0.0:
                yield a, c, float(j[a, c])


def ising_hamiltonian(model: IsingModel) -> np.ndarray:
    """Dense H_Ising over the 2^(2M) spin space."""
    sites = model.sites
    _check_sites(sites)
    sx = [site_operator(SIGMA_X, a, sites) for a in range(sites)]
    h = model.b * total_sz(sites)
    for a, c, coupling in _pairs(model.j):
        h = h + coupling * (sx[a] @ sx[c])
    return h.toarray()


def xy_hamiltonian(model: IsingModel) -> np.ndarray:
    """Dense rotating-wave limit sum_{a<b} J_ab (s+_a s-_b + s-_a s+_b)."""
    sites = model.sites
    _check_sites(sites)
    plus = [site_operator(SIGMA_PLUS, a, sites) for a in range(sites)]
    minus = [site_operator(SIGMA_MINUS, a, sites) for a in range(sites)]
    h = sp.csr_matrix((2 ** sites, 2 ** sites))
    for a, c, coupling in _pairs(model.j):
        h = h + coupling * (plus[a] @ minus[c] + minus[a] @ plus[c])
    return h.toarray()


def total_sz(sites: int) -> sp.csr_matrix:
    """sum_a sz_a, diagonal in the computational basis."""
    return sp.diags(sz_diagonal(sites), format="csr")


def sz_diagonal(sites: int) -> np.ndarray:
    index = np.arange(2 ** sites)
    excited = np.zeros(index.size)
    for site in range(sites):
        excited += (index >> (sites - 1 - site)) & 1
    return 2.0 * excited - sites


def product_state(sites: int, excited: Sequence[int]) -> np.ndarray:
    """Computational basis state with the listed sites excited."""
    _check_sites(sites)
    state = np.zeros(2 ** sites, dtype=complex)
    state[sum(1 << (sites - 1 - s) for s in excited)] = 1.0
    return state


def propagate_ising(model: IsingModel, initial: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H_Ising t)|initial> by dense eigendecomposition."""
    _check_sites(model.sites)
    initial = np.asarray(initial, dtype=complex)
    if initial.shape != (2 ** model.sites,):
        raise InvalidDimensionError(
            f"state has shape {initial.shape}, expected ({2 ** model.sites},)"
        )
    if t == 0.0:
        return initial.copy()
    return expm_hermitian(ising_hamiltonian(model), t) @ initial


def rotating_frame(state: np.ndarray, b: float, t: float) -> np.ndarray:
    """exp(+i B sum sz t)|state>: removes the precession of the transverse field."""
    state = np.asarray(state, dtype=complex)
    sites = int(round(math.log2(state.size)))
    return np.exp(1j * b * t * sz_diagonal(sites)) * state


def embed_xy(psi: SpinState) -> np.ndarray:
    """Place an hcb-sector spin state into the full 2^(2M) register."""
    sites = psi.basis.modes
    _check_sites(sites)
    full = np.zeros(2 ** sites, dtype=complex)
    full[np.asarray(psi.basis.masks, dtype=np.intp)] = psi.amplitudes
    return full


def xy_state(r: ModeUnitary, n: int, t: float) -> np.ndarray:
    """XY evolution matching the rotating-wave limit of build_ising_from_r(r, .)."""
    basis = enumerate_sector(r.m, n, SectorKind.HCB)
    transposed = from_matrix(r.entries.T, seed=r.seed)
    psi = propagate(build_spin_hamiltonian(transposed, basis), initial_spin_state(basis), t)
    return embed_xy(psi)


def rwa_fidelity(r: ModeUnitary, n: int, b: float, t: float) -> float:
    """|<psi_XY(t)|psi_rot(t)>|^2 for in-sites 1..N excited at t = 0."""
    if n > r.m:
        raise InvalidDimensionError(f"cannot excite n={n} of m={r.m} in-sites")
    model = build_ising_from_r(r, b)
    initial = product_state(model.sites, range(n))
    rotated = rotating_frame(propagate_ising(model, initial, t), b, t)
    overlap = np.vdot(xy_state(r, n, t), rotated)
    return float(min(1.0, abs(overlap) ** 2))
