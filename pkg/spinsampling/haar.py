"""Haar-distributed random unitaries that define each problem instance."""

from typing import Optional

import numpy as np

from .errors import InvalidDimensionError
from .models import ModeUnitary, SeedKey

# Sampled matrices must satisfy ||R^+R - I||_max below this.
UNITARITY_TOLERANCE = 1e-10


def make_rng(seed: Optional[SeedKey]) -> np.random.Generator:
    """PCG64 generator for an integer seed or a (seed, trial, ...) key.

    Keys are fed to SeedSequence, so (seed, 0), (seed, 1), ... are
    independent streams for parallel trials.
    """
    if seed is None:
        return np.random.Generator(np.random.PCG64())
    entropy = list(seed) if isinstance(seed, tuple) else int(seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def trial_seed(seed: int, trial: int) -> SeedKey:
    """Stream key for trial `trial` of an ensemble seeded with `seed`."""
    return (int(seed), int(trial))


def ginibre(m: int, rng: np.random.Generator) -> np.ndarray:
    """m x m matrix of i.i.d. standard complex normals."""
    return (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)


def sample_haar_unitary(m: int, seed: Optional[SeedKey] = None) -> ModeUnitary:
    """Sample R from U(m) with the Haar measure.

    QR-factorise a Ginibre matrix and divide the phases of R's diagonal out
    of Q; without that correction the result is not Haar distributed.
    """
    if m < 1:
        raise InvalidDimensionError(f"mode count must be >= 1, got {m}")

    rng = make_rng(seed)
    z = ginibre(m, rng)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return ModeUnitary(m=m, entries=q * phases[np.newaxis, :], seed=seed)


def unitarity_defect(r) -> float:
    """||R^+R - I||_max for a ModeUnitary or a raw square array."""
    entries = r.entries if isinstance(r, ModeUnitary) else np.asarray(r, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {entries.shape}")
    gram = entries.conj().T @ entries
    return float(np.max(np.abs(gram - np.eye(entries.shape[0]))))


def from_matrix(entries, seed: Optional[SeedKey] = None) -> ModeUnitary:
    """Wrap an explicit matrix (e.g. a rotation) as a ModeUnitary."""
    entries = np.asarray(entries, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
        raise InvalidDimensionError(f"expected a non-empty square matrix, got shape {entries.shape}")
    return ModeUnitary(m=entries.shape[0], entries=entries, seed=seed)
