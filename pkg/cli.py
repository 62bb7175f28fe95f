"""
Spin Sampling Toolkit - command-line entry point.

Each subcommand runs one experiment grid and writes, into its output
directory, the CSV data, a summary.json and config.echo (the resolved
configuration, re-loadable with --config).

Exit status: 0 on success, 1 if a proved bound or a normalisation check
failed, 2 on an invalid configuration.
"""

import argparse
import math
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional

from loguru import logger

from config import RunConfig, get_config, load_run_config
from spinsampling.analysis import (
    BOUND_SLACK, TRACE_PREFIX, bunching_error_bound, bunching_experiment, distance_experiment,
    error_scan_experiment, fit_loglog_slope, instance_snapshot, integral_bound_holds, norm_bound_violations,
    norm_scaling_experiment, p_hcb_all_times, p_hcb_exact, p_hcb_formula, trace_metric
)
from spinsampling.errors import ConfigError, InvalidDimensionError, SpinSamplingError, UnsupportedCouplingError
from spinsampling.experiments import CellResult, flatten, mean_std
from spinsampling.haar import sample_haar_unitary, trial_seed
from spinsampling.isingmap import rwa_fidelity, sample_haar_orthogonal
from spinsampling.linalg import uniform_grid
from spinsampling.oracles import run_suites
from spinsampling.output import (
    ORACLE_HEADER, RWA_HEADER, TRACE_HEADER, prepare_output_dir,
    record_rows, write_csv, write_json, write_records_csv, write_snapshot, write_text
)
from spinsampling.scenarios import SCALES, SUBCOMMANDS, get_scenario

TIMED_HEADER = ["n", "m", "seed", "trial", "t", "metric", "value"]

# Points per delta-norm trace written by error-scan.
TRACE_STEPS = 8

# Per-instance snapshots written by --dump.
DUMP_DIR = "dumps"
DUMP_SUBCOMMANDS = ("error-scan", "distance")

# Allowed fidelity drop when the field doubles.
RWA_RIPPLE = 0.01


def configure_logging(level: str) -> None:
    logger.remove()
    try:
        logger.add(sys.stderr, level=level, format="{time:HH:mm:ss} | {level: <7} | {message}")
    except ValueError:
        logger.add(sys.stderr, level="INFO", format="{time:HH:mm:ss} | {level: <7} | {message}")
        raise ConfigError("SPINSAMPLING_LOG_LEVEL", f"unknown log level '{level}'")


def _threads(run: RunConfig) -> Optional[int]:
    return run.threads or None


def _cell_summaries(cells: List[CellResult], metrics: List[str], **extra) -> List[dict]:
    summaries = []
    for cell in cells:
        entry = {"n": cell.n, "m": cell.m, **extra}
        if cell.skipped:
            entry["skipped"] = cell.skipped_reason
        else:
            entry["trials"] = len(cell.records)
            for metric in metrics:
                values = cell.values(metric)
                if values:
                    mean, std = mean_std(values)
                    entry[metric] = {"mean": mean, "std": std, "max": max(values)}
        summaries.append(entry)
    return summaries


def _invalid_metrics(cells: List[CellResult]) -> int:
    """Non-finite metrics or probabilities outside [0, 1]."""
    bad = 0
    for cell in cells:
        for rec in cell.records:
            broken = rec.invariant_violations()
            if broken:
                logger.error(f"[CHECK] n={rec.n} m={rec.m} trial={rec.trial}: invalid {', '.join(broken)}")
                bad += len(broken)
    return bad


def _timed_rows(cells: List[CellResult], t: float, skip_prefix: Optional[str] = None) -> List[tuple]:
    rows = []
    for n, m, seed, trial, metric, value in record_rows(flatten(cells)):
        if skip_prefix and metric.startswith(skip_prefix):
            continue
        rows.append((n, m, seed, trial, t, metric, value))
    return rows


def _write_dumps(run: RunConfig, out: Path, t: float, cells: List[CellResult]) -> int:
    """Snapshot of trial 0 for every cell that ran; the same R the trial runner drew."""
    written = 0
    for cell in cells:
        if cell.skipped:
            continue
        r = sample_haar_unitary(cell.m, seed=trial_seed(run.seed, 0))
        snapshot = instance_snapshot(r, cell.n, t, cap=run.cap)
        write_snapshot(out / DUMP_DIR / f"n{cell.n}_m{cell.m}_t{t:.6g}", snapshot)
        written += 1
    logger.info(f"[DUMP] wrote {written} snapshot(s) for t={t:.6g}")
    return written


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def run_norm_scan(run: RunConfig, out: Path) -> int:
    cells = norm_scaling_experiment(run.n_values, run.m_values, run.trials, run.seed,
                                    threads=_threads(run), cap=run.cap)
    write_records_csv(out / "norm_scan.csv", flatten(cells))

    violations = norm_bound_violations(cells)
    for rec in violations:
        logger.error(f"[NORM-SCAN] bound violated: n={rec.n} m={rec.m} trial={rec.trial} "
                     f"norm={rec.metrics['op_norm']:.12g} > {rec.n}")

    summaries = _cell_summaries(cells, ["op_norm", "op_norm_iterations"])
    for entry in summaries:
        stats = entry.get("op_norm")
        if stats:
            entry["std_over_mean"] = stats["std"] / stats["mean"] if stats["mean"] > 0 else 0.0
            entry["bound"] = entry["n"]

    exponents = {}
    for m in run.m_values:
        done = [c for c in cells if c.m == m and not c.skipped and c.n >= 2]
        skipped = [c.n for c in cells if c.m == m and c.skipped]
        if len(done) >= 2:
            slope, _ = fit_loglog_slope([c.n for c in done], [c.summary("op_norm").mean for c in done])
            exponents[str(m)] = {"exponent": slope, "fitted_n": [c.n for c in done], "skipped_n": skipped}
            if skipped:
                logger.warning(f"[NORM-SCAN] m={m}: exponent fitted without n={skipped} (over capacity)")

    failures = len(violations) + _invalid_metrics(cells)
    write_json(out / "summary.json", {
        "subcommand": run.subcommand,
        "cells": summaries,
        "norm_vs_n_exponent": exponents,
        "bound_violations": len(violations),
        "hard_failures": failures,
    })
    return failures


def run_error_scan(run: RunConfig, out: Path) -> int:
    rows, trace_rows, summaries, slopes = [], [], [], []
    failures = 0
    for t in run.times:
        grid = uniform_grid(t, TRACE_STEPS)
        cells = error_scan_experiment(run.n_values, run.m_values, t, run.trials, run.seed,
                                      threads=_threads(run), cap=run.cap, trace_times=grid)
        rows.extend(_timed_rows(cells, t, skip_prefix=TRACE_PREFIX))
        if run.dump:
            _write_dumps(run, out, t, cells)
        for cell in cells:
            for rec in cell.records:
                for k, tau in enumerate(grid):
                    trace_rows.append((rec.n, rec.m, rec.seed, rec.trial, float(tau),
                                       rec.metrics[trace_metric(k)]))
                if not integral_bound_holds(rec.metrics):
                    failures += 1
                    logger.error(
                        f"[ERROR-SCAN] integrated bound violated: n={rec.n} m={rec.m} trial={rec.trial} "
                        f"delta={rec.metrics['delta_norm']:.6g} bound={rec.metrics['integrated_bound']:.6g}"
                    )
        failures += _invalid_metrics(cells)
        summaries.extend(_cell_summaries(
            cells, ["delta_norm", "envelope", "integrated_bound", "implied_constant",
                    "pair_norm_scaled", "postselect_prob", "one_minus_delta_sq", "p_ok_gap"],
            t=t
        ))

        for n in run.n_values:
            done = [c for c in cells if c.n == n and not c.skipped]
            if len(done) < 2:
                continue
            ms = [c.m for c in done]
            deltas = [c.summary("delta_norm").mean for c in done]
            constants = [c.summary("implied_constant").mean for c in done]
            slope, _ = fit_loglog_slope(ms, constants)
            delta_slope, _ = fit_loglog_slope(ms, deltas)
            slopes.append({
                "t": t, "n": n,
                "implied_constant_slope": slope,
                "delta_norm_slope": delta_slope,
                "delta_decreasing": all(b < a for a, b in zip(deltas, deltas[1:])),
            })

    write_csv(out / "error_scan.csv", TIMED_HEADER, rows)
    write_csv(out / "delta_trace.csv", TRACE_HEADER, trace_rows)
    write_json(out / "summary.json", {
        "subcommand": run.subcommand,
        "cells": summaries,
        "trends": slopes,
        "hard_failures": failures,
    })
    return failures


def run_bunching(run: RunConfig, out: Path) -> int:
    rows, summaries = [], []
    failures = 0
    for t in run.times:
        cells = bunching_experiment(run.n_values, run.m_values, t, run.trials, run.seed,
                                    threads=_threads(run), cap=run.cap)
        rows.extend(_timed_rows(cells, t))
        failures += _invalid_metrics(cells)
        for entry in _cell_summaries(cells, ["hcb_weight", "epsilon_weight", "pair_weight"], t=t):
            n, m = entry["n"], entry["m"]
            if m >= n:
                entry["p_hcb_exact"] = p_hcb_exact(n, m)
                entry["p_hcb_all_times"] = p_hcb_all_times(n, m, t)
            if m > n:
                entry["p_hcb_formula"] = p_hcb_formula(n, m)
                entry["bunching_bound"] = bunching_error_bound(n, m)
            hcb = entry.get("hcb_weight")
            if hcb and "p_hcb_all_times" in entry:
                entry["mean_within_0.05"] = abs(hcb["mean"] - entry["p_hcb_all_times"]) <= 0.05
            eps = entry.get("epsilon_weight")
            if eps and "bunching_bound" in entry:
                entry["epsilon_within_bound"] = eps["mean"] <= entry["bunching_bound"] + 3.0 * eps["std"]
            summaries.append(entry)

    write_csv(out / "bunching.csv", TIMED_HEADER, rows)
    write_json(out / "summary.json", {
        "subcommand": run.subcommand,
        "cells": summaries,
        "hard_failures": failures,
    })
    return failures


def run_distance(run: RunConfig, out: Path) -> int:
    rows, summaries = [], []
    violations = 0
    failures = 0
    for t in run.times:
        cells = distance_experiment(run.n_values, run.m_values, t, run.trials, run.seed,
                                    threads=_threads(run), cap=run.cap)
        rows.extend(_timed_rows(cells, t))
        if run.dump:
            _write_dumps(run, out, t, cells)
        failures += _invalid_metrics(cells)
        for cell in cells:
            for rec in cell.records:
                if rec.metrics["violations"] > 0:
                    violations += 1
                    logger.error(f"[DISTANCE] bound violated: n={rec.n} m={rec.m} trial={rec.trial} "
                                 f"distance={rec.metrics['var_distance']:.6g} "
                                 f"3*delta={rec.metrics['distance_bound']:.6g}")
        summaries.extend(_cell_summaries(
            cells, ["var_distance", "distance_bound", "var_distance_postselected",
                    "postselected_bound", "delta_norm"],
            t=t
        ))

    write_csv(out / "distance.csv", TIMED_HEADER, rows)
    write_json(out / "summary.json", {
        "subcommand": run.subcommand,
        "cells": summaries,
        "violations": violations,
        "hard_failures": violations + failures,
    })
    return violations + failures


def run_rwa(run: RunConfig, out: Path) -> int:
    rows = []
    skipped = []
    failures = 0
    fidelities: Dict[tuple, List[float]] = defaultdict(list)
    for m in run.m_values:
        for n in run.n_values:
            for trial in range(run.trials):
                seed = trial_seed(run.seed, trial)
                try:
                    r = sample_haar_orthogonal(m, seed=seed)
                    for b in run.b_values:
                        for t in run.times:
                            fidelity = rwa_fidelity(r, n, b, t)
                            if not (0.0 <= fidelity <= 1.0 + BOUND_SLACK) or not math.isfinite(fidelity):
                                failures += 1
                            rows.append((m, n, b, t, fidelity, run.seed, trial))
                            fidelities[(m, n, t, b)].append(fidelity)
                except (InvalidDimensionError, UnsupportedCouplingError) as e:
                    logger.warning(f"[RWA] skipped m={m} n={n}: {e}")
                    skipped.append({"m": m, "n": n, "reason": str(e)})
                    break
            logger.info(f"[RWA] m={m} n={n} done")

    cells = []
    ripples = []
    for (m, n, t, b), values in sorted(fidelities.items()):
        mean, std = mean_std(values)
        cells.append({"m": m, "n": n, "t": t, "b": b, "fidelity": {"mean": mean, "std": std}})
        doubled = fidelities.get((m, n, t, 2 * b))
        if doubled:
            improved = mean_std(doubled)[0] >= mean - RWA_RIPPLE
            ripples.append({"m": m, "n": n, "t": t, "b": b, "b_doubled": 2 * b, "monotone": improved})

    write_csv(out / "rwa.csv", RWA_HEADER + ["seed", "trial"], rows)
    write_json(out / "summary.json", {
        "subcommand": run.subcommand,
        "cells": cells,
        "ripple_checks": ripples,
        "skipped": skipped,
        "hard_failures": failures,
    })
    return failures


def run_oracle_check(run: RunConfig, out: Path) -> int:
    cases = run_suites(run.seed, run.trials)
    write_csv(out / "oracle_check.csv", ORACLE_HEADER, [case.to_row() for case in cases])

    suites: Dict[str, dict] = {}
    for case in cases:
        entry = suites.setdefault(case.suite, {"cases": 0, "failed": 0, "worst": 0.0})
        entry["cases"] += 1
        entry["failed"] += 0 if case.passed else 1
        if math.isfinite(case.value):
            entry["worst"] = max(entry["worst"], case.value / case.tolerance)
        else:
            entry["worst"] = float('inf')
    for name, entry in suites.items():
        entry["passed"] = entry["failed"] == 0

    failures = sum(entry["failed"] for entry in suites.values())
    write_json(out / "summary.json", {
        "subcommand": run.subcommand,
        "suites": suites,
        "hard_failures": failures,
    })
    return failures


HANDLERS = {
    "norm-scan": run_norm_scan,
    "error-scan": run_error_scan,
    "bunching": run_bunching,
    "distance": run_distance,
    "rwa": run_rwa,
    "oracle-check": run_oracle_check,
}


def run(run_config: RunConfig) -> int:
    """Execute one configured run; returns the process exit status."""
    out = prepare_output_dir(run_config.out)
    write_text(out / "config.echo", run_config.echo())
    logger.info(f"[RUN] {run_config.subcommand} -> {out}")

    failures = HANDLERS[run_config.subcommand](run_config, out)
    if failures:
        logger.error(f"[RUN] {run_config.subcommand}: {failures} hard check(s) failed")
        return 1
    logger.info(f"[RUN] {run_config.subcommand}: all hard checks passed")
    return 0


# =============================================================================
# ARGUMENTS
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinsampling",
        description="Boson sampling vs spin sampling experiments"
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, help=get_scenario(name).description)
        sub.add_argument("--n", help="particle counts: 3, 2..5 or 2,3,5")
        sub.add_argument("--m", help="mode counts: 10, 7..40 or 7,10,15")
        sub.add_argument("--trials", help="Haar samples per cell")
        sub.add_argument("--seed", help="ensemble seed")
        sub.add_argument("--time", help="evolution times, e.g. 0.5pi or 0.25pi,0.5pi")
        sub.add_argument("--threads", help="worker threads (0 = one per CPU)")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--cap", help="largest sector size to enumerate")
        sub.add_argument("--scale", choices=SCALES, help="default grid size")
        sub.add_argument("--config", help="flat key=value file with any of the options above")
        if name == "rwa":
            sub.add_argument("--b", help="transverse field strengths, e.g. 25,50,100,200")
        if name in DUMP_SUBCOMMANDS:
            sub.add_argument("--dump", action="store_true", default=None,
                             help="also write states, basis and probability tables of trial 0 per cell")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    overrides = {
        key: getattr(args, key, None)
        for key in ("n", "m", "trials", "seed", "time", "threads", "out", "cap", "b", "scale", "dump")
    }
    try:
        configure_logging(get_config().LOG_LEVEL)
        run_config = load_run_config(args.subcommand, args.config, overrides)
    except ConfigError as e:
        parser.print_usage(sys.stderr)
        print(f"spinsampling {args.subcommand}: error: {e}", file=sys.stderr)
        return 2

    try:
        return run(run_config)
    except SpinSamplingError as e:
        logger.error(f"[RUN] {run_config.subcommand} aborted: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
