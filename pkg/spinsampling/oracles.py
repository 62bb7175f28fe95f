"""
Brute-force equivalence suites.

Every case compares a fast path with an independent reference and records
the discrepancy against a tolerance. All cases are hard checks.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np
from loguru import logger

from .bosondyn import (
    canonical_mode_commutators, evolve_full, naive_permanent, oracle_difference,
    output_distribution, permanent, single_particle_spectrum
)
from .fockspace import enumerate_sector
from .haar import make_rng, sample_haar_unitary, trial_seed, unitarity_defect
from .isingmap import (
    build_ising_from_r, product_state, propagate_ising, rotating_frame, sample_haar_orthogonal
)
from .models import SectorKind
from .spindyn import build_spin_hamiltonian, evolve_spin, sampling_error_delta, spin_output_distribution

PERMANENT_TOLERANCE = 1e-10
DYNAMICS_TOLERANCE = 1e-8
EQUIVALENCE_TOLERANCE = 1e-10
CONSERVATION_TOLERANCE = 1e-10

DYNAMICS_SIZES = ((1, 4), (2, 4), (2, 6), (3, 5))
DYNAMICS_TIMES = (0.0, math.pi / 4, math.pi / 2)
SINGLE_EXCITATION_MODES = (2, 8, 16)
SINGLE_EXCITATION_TIMES = (math.pi / 4, math.pi / 2)


@dataclass
class OracleCase:
    """One checked quantity."""
    suite: str
    case: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and self.value <= self.tolerance

    def to_row(self) -> tuple:
        return (self.suite, self.case, self.value, self.tolerance, self.passed)


def permanent_suite(seed: int, count: int = 200, max_dim: int = 7) -> List[OracleCase]:
    """Ryser against the permutation sum; every third matrix has a repeated row."""
    rng = make_rng((seed, 0xBE))
    cases = []
    for k in range(count):
        dim = 1 + k % max_dim
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        if k % 3 == 0 and dim > 1:
            a[dim - 1] = a[0]
        reference = naive_permanent(a)
        scale = max(abs(reference), 1e-300)
        cases.append(OracleCase("permanent", f"k={k} dim={dim}",
                                abs(permanent(a) - reference) / scale, PERMANENT_TOLERANCE))
    return cases


def dynamics_suite(seed: int, trials: int) -> List[OracleCase]:
    """Product-form amplitudes against exp(-i H_BS t) on the full sector."""
    cases = []
    for n, m in DYNAMICS_SIZES:
        for trial in range(trials):
            r = sample_haar_unitary(m, seed=trial_seed(seed, trial))
            for t in DYNAMICS_TIMES:
                cases.append(OracleCase("dynamics", f"n={n} m={m} trial={trial} t={t:.6g}",
                                        oracle_difference(r, n, t), DYNAMICS_TOLERANCE))
    return cases


def single_excitation_suite(seed: int) -> List[OracleCase]:
    """One excitation never bunches, so ||delta(t)|| vanishes."""
    cases = []
    for m in SINGLE_EXCITATION_MODES:
        r = sample_haar_unitary(m, seed=trial_seed(seed, m))
        for t in SINGLE_EXCITATION_TIMES:
            _, norm = sampling_error_delta(r, 1, t)
            cases.append(OracleCase("single-excitation", f"m={m} t={t:.6g}", norm, EQUIVALENCE_TOLERANCE))
    return cases


def structure_suite(seed: int) -> List[OracleCase]:
    """Unitarity, spectra, Hermiticity and canonical-mode commutators."""
    cases = []
    for m in (2, 4, 6):
        r = sample_haar_unitary(m, seed=trial_seed(seed, 100 + m))
        cases.append(OracleCase("structure", f"unitarity m={m}", unitarity_defect(r), 1e-10))
        spectrum = np.sort(single_particle_spectrum(r))
        expected = np.array([-1.0] * m + [1.0] * m)
        cases.append(OracleCase("structure", f"boson single-particle spectrum m={m}",
                                float(np.max(np.abs(spectrum - expected))), 1e-10))
        basis = enumerate_sector(m, 1, SectorKind.HCB)
        h = build_spin_hamiltonian(r, basis)
        spin_spectrum = np.sort(np.linalg.eigvalsh(h.matrix.toarray()))
        cases.append(OracleCase("structure", f"spin single-excitation spectrum m={m}",
                                float(np.max(np.abs(spin_spectrum - expected))), 1e-10))
        commutators = canonical_mode_commutators(r)
        cases.append(OracleCase("structure", f"canonical modes m={m}",
                                float(np.max(np.abs(commutators - np.eye(m)))), 1e-10))
    r = sample_haar_unitary(6, seed=trial_seed(seed, 106))
    h = build_spin_hamiltonian(r, enumerate_sector(6, 3, SectorKind.HCB))
    cases.append(OracleCase("structure", "spin hermiticity m=6 n=3", h.hermiticity_defect(), 1e-12))
    return cases


def conservation_suite(seed: int) -> List[OracleCase]:
    """Norms of every propagation and totals of every probability table."""
    cases = []
    r = sample_haar_unitary(5, seed=trial_seed(seed, 200))
    for t in DYNAMICS_TIMES:
        boson = evolve_full(r, 3, t)
        cases.append(OracleCase("conservation", f"boson norm t={t:.6g}", abs(boson.norm - 1.0),
                                CONSERVATION_TOLERANCE))
        spin = evolve_spin(r, 3, t)
        cases.append(OracleCase("conservation", f"spin norm t={t:.6g}", abs(spin.norm - 1.0),
                                CONSERVATION_TOLERANCE))

    orthogonal = sample_haar_orthogonal(3, seed=trial_seed(seed, 201))
    model = build_ising_from_r(orthogonal, 50.0)
    initial = product_state(model.sites, [0])
    evolved = propagate_ising(model, initial, math.pi / 2)
    cases.append(OracleCase("conservation", "ising norm", abs(np.linalg.norm(evolved) - 1.0),
                            CONSERVATION_TOLERANCE))
    rotated = rotating_frame(evolved, model.b, math.pi / 2)
    cases.append(OracleCase("conservation", "rotating frame norm", abs(np.linalg.norm(rotated) - 1.0),
                            CONSERVATION_TOLERANCE))

    r = sample_haar_unitary(8, seed=trial_seed(seed, 202))
    for collision_free in (True, False):
        table = output_distribution(r, 2, collision_free=collision_free)
        label = "collision-free" if collision_free else "all outputs"
        cases.append(OracleCase("conservation", f"boson table total ({label})", abs(table.total - 1.0),
                                CONSERVATION_TOLERANCE))
    psi = evolve_spin(r, 2, math.pi / 2)
    table = spin_output_distribution(psi, 2)
    cases.append(OracleCase("conservation", "spin table total", abs(table.total - 1.0),
                            CONSERVATION_TOLERANCE))
    return cases


SUITES: Dict[str, Callable[..., List[OracleCase]]] = {
    "permanent": lambda seed, trials: permanent_suite(seed),
    "dynamics": dynamics_suite,
    "single-excitation": lambda seed, trials: single_excitation_suite(seed),
    "structure": lambda seed, trials: structure_suite(seed),
    "conservation": lambda seed, trials: conservation_suite(seed),
}


def run_suites(seed: int, trials: int, names: Sequence[str] = tuple(SUITES)) -> List[OracleCase]:
    cases = []
    for name in names:
        suite_cases = SUITES[name](seed, trials)
        failed = sum(1 for c in suite_cases if not c.passed)
        log = logger.warning if failed else logger.info
        log(f"[ORACLE] {name}: {len(suite_cases) - failed}/{len(suite_cases)} passed")
        cases.extend(suite_cases)
    return cases
