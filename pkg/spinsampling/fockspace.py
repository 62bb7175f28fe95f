"""
Occupation-number bases for 2M modes (a-modes then b-modes) with N particles.

Three sector kinds are supported:
- full:        every occupation vector with total N
- hcb:         at most one particle per mode (the spin / hard-core sector, Q)
- one-b-pair:  exactly one b-mode holding two particles, all others <= 1 (P_1bpair)

Configs are stored in canonical order: lexicographically descending over the
occupation vector, a-modes first. For hcb sectors that is ascending lexicographic
order of the occupied positions, e.g. (m=2, n=1): 1000, 0100, 0010, 0001.
"""

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from loguru import logger

from .errors import BasisMismatchError, CapacityError, InvalidDimensionError
from .models import BosonState, ModeUnitary, SectorBasis, SectorKind, SpinState

DEFAULT_CAPACITY = 5_000_000

# Largest integer key we pack configs into (keeps int64 arithmetic exact).
_KEY_LIMIT = 2 ** 62


# =============================================================================
# SECTOR SIZES
# =============================================================================

def sector_size(m: int, n: int, kind: Union[str, SectorKind]) -> int:
    """Closed-form number of configs in a sector."""
    kind = SectorKind.parse(kind)
    if kind == SectorKind.FULL:
        return math.comb(2 * m + n - 1, n)
    if kind == SectorKind.HCB:
        return math.comb(2 * m, n)
    if n < 2:
        return 0
    return m * math.comb(2 * m - 1, n - 2)


def sector_formula(m: int, n: int, kind: Union[str, SectorKind]) -> str:
    """Human-readable binomial for a sector size, e.g. 'C(8,3)=56'."""
    kind = SectorKind.parse(kind)
    size = sector_size(m, n, kind)
    if kind == SectorKind.FULL:
        return f"C({2 * m + n - 1},{n})={size}"
    if kind == SectorKind.HCB:
        return f"C({2 * m},{n})={size}"
    if n < 2:
        return "0"
    return f"{m}*C({2 * m - 1},{n - 2})={size}"


def check_capacity(m: int, n: int, kind: Union[str, SectorKind], cap: int = DEFAULT_CAPACITY) -> int:
    size = sector_size(m, n, kind)
    if size > cap:
        kind = SectorKind.parse(kind)
        raise CapacityError(
            f"{kind.value} sector for m={m}, n={n} has {sector_formula(m, n, kind)} states, cap is {cap}",
            size=size, cap=cap
        )
    return size


# =============================================================================
# ENUMERATION
# =============================================================================

def _compositions(n: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Occupation vectors of `parts` modes summing to n, descending lexicographic."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def _canonical_sort(configs: np.ndarray) -> np.ndarray:
    if configs.shape[0] < 2:
        return configs
    keys = [-configs[:, k] for k in range(configs.shape[1] - 1, -1, -1)]
    return configs[np.lexsort(keys)]


def _full_configs(m: int, n: int) -> np.ndarray:
    rows = list(_compositions(n, 2 * m))
    return np.array(rows, dtype=np.int16).reshape(len(rows), 2 * m)


def _hcb_configs(m: int, n: int) -> np.ndarray:
    combos = list(itertools.combinations(range(2 * m), n))
    positions = np.array(combos, dtype=np.intp).reshape(len(combos), n)
    configs = np.zeros((positions.shape[0], 2 * m), dtype=np.int16)
    if n:
        configs[np.arange(positions.shape[0])[:, None], positions] = 1
    return configs


def _one_b_pair_configs(m: int, n: int) -> np.ndarray:
    if n < 2:
        return np.zeros((0, 2 * m), dtype=np.int16)
    blocks = []
    for pair_mode in range(m, 2 * m):
        others = [k for k in range(2 * m) if k != pair_mode]
        combos = list(itertools.combinations(others, n - 2))
        singles = np.array(combos, dtype=np.intp).reshape(len(combos), n - 2)
        block = np.zeros((singles.shape[0], 2 * m), dtype=np.int16)
        block[:, pair_mode] = 2
        if n > 2:
            block[np.arange(singles.shape[0])[:, None], singles] = 1
        blocks.append(block)
    return _canonical_sort(np.vstack(blocks))


@lru_cache(maxsize=64)
def _build_sector(m: int, n: int, kind: SectorKind) -> SectorBasis:
    if kind == SectorKind.FULL:
        configs = _full_configs(m, n)
    elif kind == SectorKind.HCB:
        configs = _hcb_configs(m, n)
    else:
        configs = _one_b_pair_configs(m, n)
    logger.debug(f"[FOCK] enumerated {kind.value} sector m={m} n={n}: {configs.shape[0]} states")
    return SectorBasis(m=m, n=n, kind=kind, configs=configs)


def enumerate_sector(
    m: int,
    n: int,
    kind: Union[str, SectorKind],
    cap: int = DEFAULT_CAPACITY
) -> SectorBasis:
    """Complete, duplicate-free basis of a sector in canonical order.

    Bases are immutable and cached, so repeated calls return the same object.
    """
    if m < 1:
        raise InvalidDimensionError(f"mode count must be >= 1, got {m}")
    if n < 0:
        raise InvalidDimensionError(f"particle count must be >= 0, got {n}")
    kind = SectorKind.parse(kind)
    check_capacity(m, n, kind, cap)
    return _build_sector(m, n, kind)


def initial_config(m: int, n: int) -> Tuple[int, ...]:
    """a_1 ... a_N occupied, everything else empty."""
    if n > m:
        raise InvalidDimensionError(f"cannot place n={n} particles on m={m} input modes")
    return tuple([1] * n + [0] * (2 * m - n))


# =============================================================================
# KEYS AND LOOKUP
# =============================================================================

def _kind_base(basis: SectorBasis) -> int:
    """One more than the largest occupation the sector allows."""
    if basis.kind == SectorKind.HCB:
        return 2
    if basis.kind == SectorKind.ONE_B_PAIR:
        return 3
    return basis.n + 1


@dataclass(frozen=True, eq=False)
class KeyTable:
    """Integer keys for the configs of one basis.

    Modes are split into chunks small enough for an exact int64 mixed-radix
    key (mode 0 most significant). Each chunk key is replaced by its rank among
    the chunk keys that occur in the basis, and the ranks are combined mixed
    radix, so the combined key is lexicographic and never overflows.
    """
    base: int
    bounds: Tuple[Tuple[int, int], ...]
    weights: Tuple[np.ndarray, ...]
    uniques: Tuple[np.ndarray, ...]
    strides: np.ndarray
    ascending: np.ndarray
    rows: np.ndarray

    def chunk_of(self, mode: int) -> Tuple[int, int]:
        """(chunk index, weight of `mode` inside that chunk)."""
        for c, (start, stop) in enumerate(self.bounds):
            if start <= mode < stop:
                return c, int(self.weights[c][mode - start])
        raise IndexError(mode)

    def chunk_keys(self, configs: np.ndarray) -> np.ndarray:
        configs = np.asarray(configs).astype(np.int64)
        return np.stack(
            [configs[:, start:stop] @ w for (start, stop), w in zip(self.bounds, self.weights)],
            axis=1
        )

    def combine(self, chunk_keys: np.ndarray) -> np.ndarray:
        """Combined key per row, -1 where some chunk never occurs in the basis."""
        combined = np.zeros(chunk_keys.shape[0], dtype=np.int64)
        found = np.ones(chunk_keys.shape[0], dtype=bool)
        for c, uniques in enumerate(self.uniques):
            idx = np.minimum(np.searchsorted(uniques, chunk_keys[:, c]), uniques.size - 1)
            found &= uniques[idx] == chunk_keys[:, c]
            combined += idx * self.strides[c]
        return np.where(found, combined, -1)

    def rows_of(self, chunk_keys: np.ndarray) -> np.ndarray:
        """Basis row for each set of chunk keys, or -1."""
        keys = self.combine(chunk_keys)
        idx = np.minimum(np.searchsorted(self.ascending, keys), self.ascending.size - 1)
        hit = (keys >= 0) & (self.ascending[idx] == keys)
        return np.where(hit, self.rows[idx], -1)


@lru_cache(maxsize=64)
def key_table(basis: SectorBasis) -> Optional[KeyTable]:
    """KeyTable for a basis, or None when even the rank product overflows."""
    if basis.dim == 0:
        return None
    base = _kind_base(basis)
    per_chunk = max(1, int(math.floor(math.log(_KEY_LIMIT) / math.log(base))) - 1)
    bounds = tuple((s, min(s + per_chunk, basis.modes)) for s in range(0, basis.modes, per_chunk))
    weights = tuple(
        np.array([base ** (stop - 1 - k) for k in range(start, stop)], dtype=np.int64)
        for start, stop in bounds
    )
    configs = basis.configs.astype(np.int64)
    chunk_keys = np.stack([configs[:, s:e] @ w for (s, e), w in zip(bounds, weights)], axis=1)
    uniques = tuple(np.unique(chunk_keys[:, c]) for c in range(len(bounds)))

    sizes = [u.size for u in uniques]
    if math.prod(sizes) >= _KEY_LIMIT:
        return None
    strides = np.array([math.prod(sizes[c + 1:]) for c in range(len(sizes))], dtype=np.int64)

    table = KeyTable(base=base, bounds=bounds, weights=weights, uniques=uniques,
                     strides=strides, ascending=np.zeros(0, dtype=np.int64), rows=np.zeros(0, dtype=np.intp))
    keys = table.combine(chunk_keys)
    order = np.argsort(keys, kind="stable")
    object.__setattr__(table, 'ascending', keys[order])
    object.__setattr__(table, 'rows', order.astype(np.intp))
    return table


def locate(basis: SectorBasis, configs: np.ndarray) -> np.ndarray:
    """Row of each config in `basis`, or -1 where the config is not in it."""
    configs = np.asarray(configs).reshape(-1, basis.modes)
    table = key_table(basis)
    if table is None:
        index = basis.index
        return np.array([index.get(tuple(int(x) for x in row), -1) for row in configs], dtype=np.intp)
    valid = (configs.max(axis=1, initial=0) < table.base) & (configs.min(axis=1, initial=0) >= 0)
    rows = table.rows_of(table.chunk_keys(np.clip(configs, 0, table.base - 1)))
    return np.where(valid, rows, -1)


# =============================================================================
# PROJECTION
# =============================================================================

@lru_cache(maxsize=64)
def embedding(source: SectorBasis, target: SectorBasis) -> np.ndarray:
    """Row in `source` of every config of `target` (target must be a subset)."""
    if (source.m, source.n) != (target.m, target.n):
        raise BasisMismatchError(
            f"bases differ: source (m={source.m}, n={source.n}), target (m={target.m}, n={target.n})"
        )
    rows = locate(source, target.configs)
    if np.any(rows < 0):
        missing = target.config(int(np.flatnonzero(rows < 0)[0])).label()
        raise BasisMismatchError(
            f"{target.kind.value} basis is not contained in {source.kind.value} basis (e.g. {missing})"
        )
    return rows


def project(
    state: Union[BosonState, SpinState],
    target: SectorBasis
) -> BosonState:
    """Keep the amplitudes of configs shared with `target`, drop the rest."""
    rows = embedding(state.basis, target)
    return BosonState(basis=target, amplitudes=np.asarray(state.amplitudes)[rows])


def complement_weight(state: Union[BosonState, SpinState], target: SectorBasis) -> float:
    """||(1 - P_target) state||^2."""
    kept = project(state, target)
    return float(max(state.norm ** 2 - kept.norm ** 2, 0.0))


# =============================================================================
# HOPPING PATTERNS
# =============================================================================

@dataclass(frozen=True, eq=False)
class HopPattern:
    """Sparsity pattern of the a_i -> b_j hops that map `source` configs into `target`.

    Entry k moves one particle from a-mode in_modes[k] to b-mode out_modes[k];
    its matrix element is R[out, in] * factors[k] (factors carry the bosonic
    sqrt(occupation) weights). The structure is independent of R, so it is
    built once per pair of bases and reused for every Haar trial.
    """
    source: SectorBasis
    target: SectorBasis
    rows: np.ndarray
    cols: np.ndarray
    out_modes: np.ndarray
    in_modes: np.ndarray
    factors: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    def values(self, r: Union[ModeUnitary, np.ndarray]) -> np.ndarray:
        entries = r.entries if isinstance(r, ModeUnitary) else np.asarray(r)
        return entries[self.out_modes, self.in_modes] * self.factors

    def matrix(self, r: Union[ModeUnitary, np.ndarray]) -> sp.csr_matrix:
        """Block of sum_ij b_j^+ R_ji a_i mapping source amplitudes onto target."""
        shape = (self.target.dim, self.source.dim)
        return sp.csr_matrix((self.values(r), (self.rows, self.cols)), shape=shape)


def _vectorized_hops(source: SectorBasis, target: SectorBasis, table: KeyTable):
    m = source.m
    base = table.base
    occ = source.configs
    src_keys = table.chunk_keys(occ)

    rows, cols, outs, ins, factors = [], [], [], [], []
    for i in range(m):
        has_a = occ[:, i] > 0
        if not np.any(has_a):
            continue
        chunk_i, weight_i = table.chunk_of(i)
        for j in range(m):
            b = m + j
            sel = np.flatnonzero(has_a & (occ[:, b] + 1 < base))
            if sel.size == 0:
                continue
            keys = src_keys[sel].copy()
            keys[:, chunk_i] -= weight_i
            chunk_b, weight_b = table.chunk_of(b)
            keys[:, chunk_b] += weight_b
            hit = table.rows_of(keys)
            ok = hit >= 0
            if not np.any(ok):
                continue
            sel = sel[ok]
            rows.append(hit[ok])
            cols.append(sel)
            outs.append(np.full(sel.size, j, dtype=np.intp))
            ins.append(np.full(sel.size, i, dtype=np.intp))
            factors.append(np.sqrt(occ[sel, i].astype(float) * (occ[sel, b].astype(float) + 1.0)))
    return rows, cols, outs, ins, factors


def _admits(kind: SectorKind, occupations: np.ndarray, m: int) -> bool:
    if kind == SectorKind.FULL:
        return True
    if kind == SectorKind.HCB:
        return int(occupations.max(initial=0)) <= 1
    over = np.flatnonzero(occupations > 1)
    return over.size == 1 and over[0] >= m and occupations[over[0]] == 2


def _looped_hops(source: SectorBasis, target: SectorBasis):
    """Walk target configs backwards (b_j -> a_i) and look the origin up in source."""
    m = source.m
    index = source.index
    rows, cols, outs, ins, factors = [], [], [], [], []
    for t_row, t in enumerate(target.configs):
        for j in range(m):
            b = m + j
            if t[b] == 0:
                continue
            reduced = t.copy()
            reduced[b] -= 1
            for i in range(m):
                candidate = reduced.copy()
                candidate[i] += 1
                if not _admits(source.kind, candidate, m):
                    continue
                s_row = index.get(tuple(int(x) for x in candidate))
                if s_row is None:
                    continue
                rows.append(t_row)
                cols.append(s_row)
                outs.append(j)
                ins.append(i)
                factors.append(math.sqrt(candidate[i] * t[b]))
    as_arrays = [np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp),
                 np.asarray(outs, dtype=np.intp), np.asarray(ins, dtype=np.intp),
                 np.asarray(factors, dtype=float)]
    return [[a] for a in as_arrays]


@lru_cache(maxsize=32)
def hop_pattern(source: SectorBasis, target: SectorBasis) -> HopPattern:
    """All a -> b single-particle hops from `source` configs that land in `target`."""
    if (source.m, source.n) != (target.m, target.n):
        raise BasisMismatchError(
            f"bases differ: source (m={source.m}, n={source.n}), target (m={target.m}, n={target.n})"
        )
    table = key_table(target)
    fits = table is not None and int(source.configs.max(initial=0)) < table.base
    parts = _vectorized_hops(source, target, table) if fits else _looped_hops(source, target)

    def _cat(chunks, dtype):
        return np.concatenate(chunks).astype(dtype) if chunks else np.zeros(0, dtype=dtype)

    rows, cols, outs, ins = (_cat(p, np.intp) for p in parts[:4])
    factors = _cat(parts[4], float)
    order = np.lexsort((cols, rows))
    logger.debug(
        f"[FOCK] hop pattern {source.kind.value}->{target.kind.value} "
        f"m={source.m} n={source.n}: {rows.size} entries ({'vectorized' if fits else 'looped'})"
    )
    return HopPattern(
        source=source, target=target,
        rows=rows[order], cols=cols[order],
        out_modes=outs[order], in_modes=ins[order],
        factors=factors[order]
    )


# =============================================================================
# DUMPS
# =============================================================================

def dump_basis_csv(basis: SectorBasis, path) -> None:
    """One config per row: index, label, then the occupations."""
    header = ["index", "config"] + [f"a{k + 1}" for k in range(basis.m)] + [f"b{k + 1}" for k in range(basis.m)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for i, (label, row) in enumerate(zip(basis.labels(), basis.configs.tolist())):
            writer.writerow([i, label] + row)
