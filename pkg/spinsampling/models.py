"""Data models for the spin sampling toolkit."""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp


SeedKey = Union[int, Tuple[int, ...]]

# Probabilities may overshoot 1 by this much through rounding.
PROBABILITY_SLACK = 1e-10


class SectorKind(Enum):
    """Which slice of the N-particle Fock space a basis spans."""
    FULL = "full"              # every occupation with total N
    HCB = "hcb"                # at most one particle per mode
    ONE_B_PAIR = "one-b-pair"  # exactly one doubly occupied b-mode, rest <= 1

    @staticmethod
    def parse(value: Union[str, 'SectorKind']) -> 'SectorKind':
        if isinstance(value, SectorKind):
            return value
        return SectorKind(str(value).strip().lower())


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    """An M x M unitary R defining one circuit / coupling instance."""
    m: int
    entries: np.ndarray
    seed: Optional[SeedKey] = None

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        object.__setattr__(self, 'entries', _readonly(entries))

    @property
    def conj(self) -> np.ndarray:
        return self.entries.conj()

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.entries.imag == 0.0))

    def to_dict(self) -> dict:
        """Row-major [re, im] pairs, as used for replay dumps."""
        return {
            "m": self.m,
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }

    @staticmethod
    def from_dict(data: dict) -> 'ModeUnitary':
        pairs = np.asarray(data['entries'], dtype=float)
        seed = data.get('seed')
        if isinstance(seed, list):
            seed = tuple(seed)
        return ModeUnitary(
            m=int(data['m']),
            entries=pairs[..., 0] + 1j * pairs[..., 1],
            seed=seed
        )


@dataclass(frozen=True)
class OccupationConfig:
    """Occupations of the 2M modes: positions 0..M-1 are a-modes, M..2M-1 are b-modes."""
    occupations: Tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.occupations) // 2

    @property
    def total(self) -> int:
        return sum(self.occupations)

    @property
    def a_part(self) -> Tuple[int, ...]:
        return self.occupations[:self.m]

    @property
    def b_part(self) -> Tuple[int, ...]:
        return self.occupations[self.m:]

    def label(self) -> str:
        return occupation_label(self.occupations)

    @staticmethod
    def from_parts(a: Sequence[int], b: Sequence[int]) -> 'OccupationConfig':
        return OccupationConfig(tuple(int(x) for x in a) + tuple(int(x) for x in b))


def occupation_label(occupations: Sequence[int]) -> str:
    """Compact string form: digits when every occupation is < 10, else comma separated."""
    values = [int(x) for x in occupations]
    if values and max(values) > 9:
        return ",".join(str(x) for x in values)
    return "".join(str(x) for x in values)


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Enumerated sector of the 2M-mode, N-particle space in canonical order.

    `configs` is an (K, 2M) integer array; row i is the occupation vector of
    basis state i. `index` maps occupation tuples back to rows.
    """
    m: int
    n: int
    kind: SectorKind
    configs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'configs', _readonly(np.asarray(self.configs, dtype=np.int16)))

    def __len__(self) -> int:
        return int(self.configs.shape[0])

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def modes(self) -> int:
        return 2 * self.m

    @cached_property
    def index(self) -> Dict[Tuple[int, ...], int]:
        return {tuple(int(x) for x in row): i for i, row in enumerate(self.configs)}

    @cached_property
    def masks(self) -> List[int]:
        """Bitmask per config (mode 0 is the most significant bit); hcb only."""
        weights = [1 << (self.modes - 1 - k) for k in range(self.modes)]
        return [sum(w for w, occ in zip(weights, row) if occ) for row in self.configs.tolist()]

    @cached_property
    def mask_index(self) -> Dict[int, int]:
        return {mask: i for i, mask in enumerate(self.masks)}

    def config(self, i: int) -> OccupationConfig:
        return OccupationConfig(tuple(int(x) for x in self.configs[i]))

    def position(self, config: Union[OccupationConfig, Sequence[int]]) -> Optional[int]:
        occupations = config.occupations if isinstance(config, OccupationConfig) else tuple(config)
        return self.index.get(tuple(int(x) for x in occupations))

    def labels(self) -> List[str]:
        return [occupation_label(row) for row in self.configs.tolist()]

    def out_only_rows(self) -> np.ndarray:
        """Rows whose particles all sit on b-modes."""
        return np.flatnonzero(self.configs[:, :self.m].sum(axis=1) == 0)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "kind": self.kind.value,
            "dim": self.dim,
        }


@dataclass(frozen=True)
class ProductFormState:
    """Implicit boson state phi(t) = prod_k (cos t a_k^+ - i sin t sum_j R_jk b_j^+)|0>."""
    r: ModeUnitary
    n: int
    t: float


@dataclass(frozen=True, eq=False)
class BosonState:
    """Amplitudes of a boson state on an enumerated sector."""
    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'amplitudes', _readonly(np.asarray(self.amplitudes, dtype=complex)))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.to_dict(),
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes]
        }


@dataclass(frozen=True, eq=False)
class SpinHamiltonian:
    """H = Q H_BS Q as a sparse matrix over an hcb basis."""
    basis: SectorBasis
    matrix: sp.csr_matrix

    def hermiticity_defect(self) -> float:
        diff = (self.matrix - self.matrix.conj().T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def max_row_nonzeros(self) -> int:
        return int(np.max(np.diff(self.matrix.indptr))) if self.matrix.shape[0] else 0


@dataclass(frozen=True, eq=False)
class SpinState:
    """Amplitudes of psi(t) on an hcb basis."""
    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'amplitudes', _readonly(np.asarray(self.amplitudes, dtype=complex)))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.to_dict(),
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes]
        }


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """Probabilities keyed by configuration label, in a fixed label order."""
    labels: Tuple[str, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'labels', tuple(self.labels))
        object.__setattr__(self, 'probabilities', _readonly(np.asarray(self.probabilities, dtype=float)))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def total(self) -> float:
        return math.fsum(self.probabilities.tolist())

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.labels, self.probabilities.tolist()))

    def get(self, label: str) -> float:
        return self.as_dict().get(label, 0.0)

    def to_rows(self) -> List[Tuple[str, float]]:
        return list(zip(self.labels, self.probabilities.tolist()))


# Metrics that are probabilities and must lie in [0, 1].
PROBABILITY_METRICS = frozenset({
    "hcb_weight", "epsilon_weight", "pair_weight", "postselect_prob",
    "one_minus_delta_sq", "backscatter_weight", "fidelity",
    "p_hcb_formula", "p_hcb_exact", "bunching_bound",
})


@dataclass
class ExperimentRecord:
    """One Haar trial's measured quantities."""
    m: int
    n: int
    seed: int
    trial: int = 0
    metrics: Dict[str, float] = field(default_factory=dict)
    skipped_reason: Optional[str] = None

    @property
    def skipped(self) -> bool:
        return self.skipped_reason is not None

    def invariant_violations(self) -> List[str]:
        """Names of metrics that are non-finite or out-of-range probabilities."""
        bad = []
        for name, value in self.metrics.items():
            if not math.isfinite(value):
                bad.append(name)
            elif name in PROBABILITY_METRICS and not (0.0 <= value <= 1.0 + PROBABILITY_SLACK):
                bad.append(name)
        return bad

    def to_rows(self) -> List[Tuple[int, int, int, int, str, float]]:
        return [(self.n, self.m, self.seed, self.trial, name, value)
                for name, value in sorted(self.metrics.items())]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "seed": self.seed,
            "trial": self.trial,
            "metrics": dict(sorted(self.metrics.items())),
            "skipped_reason": self.skipped_reason
        }


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Transverse-field Ising model on 2M sites with in/out block couplings."""
    m: int
    j: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, 'j', _readonly(np.array(self.j, dtype=float)))

    @property
    def sites(self) -> int:
        return 2 * self.m

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.j - self.j.T))) if self.j.size else 0.0

    @property
    def coupling_block(self) -> np.ndarray:
        """J_{i, j+M}: in-site rows, out-site columns."""
        return self.j[:self.m, self.m:]


@dataclass
class CellSummary:
    """Mean / std of one metric over the trials of one grid cell."""
    n: int
    m: int
    metric: str
    mean: float
    std: float
    count: int
    extra: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = {
            "n": self.n,
            "m": self.m,
            "metric": self.metric,
            "mean": self.mean,
            "std": self.std,
            "count": self.count
        }
        data.update(self.extra)
        return data


@dataclass(frozen=True, eq=False)
class InstanceSnapshot:
    """Boson and spin states of one instance on a shared hcb basis, plus their outcome tables."""
    r: ModeUnitary
    t: float
    basis: SectorBasis
    boson: BosonState
    spin: SpinState
    boson_table: ProbabilityTable
    spin_table: ProbabilityTable
