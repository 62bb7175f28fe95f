"""
Trial runner for Haar ensembles.

Each trial is a pure function of (m, n, seed, trial); trials run on a thread
pool and are put back in trial order before anything is reduced, so results
do not depend on the thread count.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from loguru import logger

from .errors import CapacityError
from .haar import sample_haar_unitary, trial_seed
from .models import CellSummary, ExperimentRecord, ModeUnitary

TrialFunction = Callable[[ModeUnitary, int], Dict[str, float]]


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def mean_std(values: Sequence[float]) -> tuple:
    """Population mean and standard deviation with exactly rounded sums."""
    count = len(values)
    if count == 0:
        return float('nan'), float('nan')
    mean = math.fsum(values) / count
    variance = math.fsum((v - mean) ** 2 for v in values) / count
    return mean, math.sqrt(variance)


@dataclass
class CellResult:
    """All trials of one (n, m) grid cell."""
    n: int
    m: int
    records: List[ExperimentRecord] = field(default_factory=list)
    skipped_reason: Optional[str] = None
    elapsed: float = 0.0

    @property
    def skipped(self) -> bool:
        return self.skipped_reason is not None

    def values(self, metric: str) -> List[float]:
        return [rec.metrics[metric] for rec in self.records if metric in rec.metrics]

    def summary(self, metric: str) -> CellSummary:
        values = self.values(metric)
        mean, std = mean_std(values)
        return CellSummary(n=self.n, m=self.m, metric=metric, mean=mean, std=std, count=len(values))


class TrialRunner:
    """Runs trial functions over Haar samples with per-trial RNG streams."""

    def __init__(self, seed: int, trials: int, threads: Optional[int] = None):
        self.seed = int(seed)
        self.trials = int(trials)
        self.threads = threads or default_threads()

    def _one(self, m: int, n: int, trial: int, fn: TrialFunction) -> ExperimentRecord:
        r = sample_haar_unitary(m, seed=trial_seed(self.seed, trial))
        metrics = fn(r, n)
        return ExperimentRecord(m=m, n=n, seed=self.seed, trial=trial, metrics=metrics)

    def run_cell(self, n: int, m: int, fn: TrialFunction, tag: str = "TRIALS") -> CellResult:
        """All trials of one cell; a capacity overflow skips the cell instead of failing."""
        started = time.perf_counter()
        try:
            if self.threads == 1 or self.trials == 1:
                records = [self._one(m, n, trial, fn) for trial in range(self.trials)]
            else:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    futures = [pool.submit(self._one, m, n, trial, fn) for trial in range(self.trials)]
                    records = [f.result() for f in futures]
        except CapacityError as e:
            logger.warning(f"[CAPACITY] skipped n={n} m={m}: {e}")
            return CellResult(n=n, m=m, skipped_reason=str(e))

        records.sort(key=lambda rec: rec.trial)
        cell = CellResult(n=n, m=m, records=records, elapsed=time.perf_counter() - started)
        logger.info(f"[{tag}] n={n} m={m} trials={len(records)} done in {cell.elapsed:.2f}s")
        return cell

    def run_grid(
        self,
        n_values: Iterable[int],
        m_values: Iterable[int],
        fn: TrialFunction,
        tag: str = "TRIALS"
    ) -> List[CellResult]:
        m_values = list(m_values)
        return [self.run_cell(n, m, fn, tag=tag) for n in n_values for m in m_values]


def skipped_record(cell: CellResult) -> ExperimentRecord:
    """Placeholder row so a skipped cell still shows up in the output table."""
    return ExperimentRecord(m=cell.m, n=cell.n, seed=-1, trial=-1, skipped_reason=cell.skipped_reason)


def flatten(cells: Iterable[CellResult]) -> List[ExperimentRecord]:
    records = []
    for cell in cells:
        records.extend(cell.records if not cell.skipped else [skipped_record(cell)])
    return records
