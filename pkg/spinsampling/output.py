"""CSV and JSON writers for run artifacts."""

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import numpy as np
from loguru import logger

from .fockspace import dump_basis_csv
from .models import BosonState, ExperimentRecord, InstanceSnapshot, ProbabilityTable, SpinState

PathLike = Union[str, Path]

RECORD_HEADER = ["n", "m", "seed", "trial", "metric", "value"]
TRACE_HEADER = ["n", "m", "seed", "trial", "t", "norm"]
RWA_HEADER = ["m", "n", "b", "t", "fidelity"]
ORACLE_HEADER = ["suite", "case", "value", "tolerance", "passed"]


def format_value(value: Any) -> str:
    """Exact, locale-free text for a CSV cell (floats as %.17g)."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write rows under a fixed header; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.debug(f"[OUTPUT] wrote {count} rows to {path}")
    return count


def record_rows(records: Iterable[ExperimentRecord]) -> List[tuple]:
    """Long-format rows; a skipped cell becomes one 'skipped' row carrying its reason."""
    rows = []
    for rec in records:
        if rec.skipped:
            rows.append((rec.n, rec.m, rec.seed, rec.trial, "skipped", rec.skipped_reason))
        else:
            rows.extend(rec.to_rows())
    return rows


def write_records_csv(path: PathLike, records: Iterable[ExperimentRecord]) -> int:
    return write_csv(path, RECORD_HEADER, record_rows(records))


def write_probability_csv(path: PathLike, table: ProbabilityTable) -> int:
    return write_csv(path, ["config", "probability"], table.to_rows())


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: PathLike, data: Any) -> None:
    """Sorted-key JSON; non-finite floats are written as null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(_jsonable(data), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_state_json(path: PathLike, state: Union[BosonState, SpinState]) -> None:
    """Basis reference plus [re, im] amplitude pairs."""
    write_json(path, state.to_dict())


def write_snapshot(directory: PathLike, snapshot: InstanceSnapshot) -> Path:
    """Unitary, hcb basis, both states and both outcome tables of one instance."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_json(directory / "unitary.json", snapshot.r.to_dict())
    dump_basis_csv(snapshot.basis, directory / "basis.csv")
    write_state_json(directory / "boson_state.json", snapshot.boson)
    write_state_json(directory / "spin_state.json", snapshot.spin)
    write_probability_csv(directory / "boson_probabilities.csv", snapshot.boson_table)
    write_probability_csv(directory / "spin_probabilities.csv", snapshot.spin_table)
    logger.debug(f"[OUTPUT] snapshot of {snapshot.basis.dim} hcb configs in {directory}")
    return directory


def write_text(path: PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def prepare_output_dir(path: PathLike) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
