"""
Bounds and ensemble experiments relating boson sampling to spin sampling.

- p_HCB: probability that N Haar-scattered bosons land without collisions
- ||Q H_BS P_1bpair||: the only channel feeding bunched amplitude back into
  the hard-core sector (bounded by N)
- error reports: measured ||delta|| against the t N^2 / sqrt(M) envelope and
  the time integral of ||Q H_BS P_1bpair|| ||P_1bpair phi(tau)||
- variation distance between boson and spin output tables
"""

import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from .bosondyn import assemble_state, config_amplitudes, expansion_weights
from .errors import DomainError, SupportMismatchError
from .experiments import CellResult, TrialRunner
from .fockspace import DEFAULT_CAPACITY, enumerate_sector
from .linalg import (
    POWER_MAX_ITER, POWER_TOLERANCE, PowerIterationResult, integrate,
    largest_singular_value, uniform_grid
)
from .models import (
    ExperimentRecord, InstanceSnapshot, ModeUnitary, ProbabilityTable, ProductFormState, SectorKind
)
from .spindyn import (
    backscatter_weight, build_spin_hamiltonian, delta_trace, initial_spin_state, pair_to_hcb_block,
    postselect_success, propagate, spin_output_distribution
)

# Time steps of the integrated error bound.
BOUND_STEPS = 64

# Relative slack for bounds that hold exactly in exact arithmetic.
BOUND_SLACK = 1e-9


# =============================================================================
# BUNCHING
# =============================================================================

def p_hcb_formula(n: int, m: int) -> float:
    """prod_{a=0..N} (M - a) / (M + a), as the bunching bound states it."""
    if m <= n:
        raise DomainError(f"p_HCB needs m > n, got n={n}, m={m}")
    return math.prod((m - a) / (m + a) for a in range(n + 1))


def p_hcb_exact(n: int, m: int) -> float:
    """Haar no-collision probability prod_{a=0..N-1} (M - a)/(M + a) = C(M,N)/C(M+N-1,N).

    One factor fewer than p_hcb_formula; equals 1 at N = 0 and N = 1.
    """
    if m < n:
        raise DomainError(f"no-collision probability needs m >= n, got n={n}, m={m}")
    return math.comb(m, n) / math.comb(m + n - 1, n) if n else 1.0


def p_hcb_all_times(n: int, m: int, t: float) -> float:
    """Expected ||Q phi(t)||^2: sum_k w_k(t) p_hcb_exact(k, M) over transferred counts k."""
    weights = expansion_weights(n, t)
    return math.fsum(w * p_hcb_exact(k, m) for k, w in enumerate(weights.tolist()))


def bunching_error_bound(n: int, m: int) -> float:
    """1 - p_hcb_formula(n, m): bound on ||eps(t)||^2."""
    return 1.0 - p_hcb_formula(n, m)


def bunching_trial(t: float, cap: int = DEFAULT_CAPACITY):
    """Trial function measuring ||Q phi(t)||^2 and ||P_1bpair phi(t)||^2."""
    def trial(r: ModeUnitary, n: int) -> Dict[str, float]:
        state = ProductFormState(r=r, n=n, t=t)
        hcb = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
        hcb_weight = math.fsum((np.abs(config_amplitudes(state, hcb)) ** 2).tolist())
        metrics = {
            "hcb_weight": hcb_weight,
            "epsilon_weight": max(0.0, 1.0 - hcb_weight),
        }
        if n >= 2:
            pair = enumerate_sector(r.m, n, SectorKind.ONE_B_PAIR, cap=cap)
            metrics["pair_weight"] = math.fsum((np.abs(config_amplitudes(state, pair)) ** 2).tolist())
        return metrics
    return trial


def bunching_experiment(
    n_values: Sequence[int],
    m_values: Sequence[int],
    t: float,
    trials: int,
    seed: int,
    threads: Optional[int] = None,
    cap: int = DEFAULT_CAPACITY
) -> List[CellResult]:
    runner = TrialRunner(seed=seed, trials=trials, threads=threads)
    return runner.run_grid(n_values, m_values, bunching_trial(t, cap=cap), tag="BUNCHING")


# =============================================================================
# OPERATOR NORM
# =============================================================================

def operator_norm_estimate(
    r: ModeUnitary,
    n: int,
    cap: int = DEFAULT_CAPACITY,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITER
) -> PowerIterationResult:
    """Power-iteration estimate of ||Q H_BS P_1bpair||_2 with convergence details."""
    if n < 2:
        return PowerIterationResult(value=0.0, iterations=0, converged=True)
    return largest_singular_value(pair_to_hcb_block(r, n, cap=cap), tol=tol, max_iter=max_iter)


def operator_norm_qhp(r: ModeUnitary, n: int, cap: int = DEFAULT_CAPACITY) -> float:
    """||Q H_BS P_1bpair||_2; 0 when N < 2 (no one-b-pair sector)."""
    return operator_norm_estimate(r, n, cap=cap).value


def norm_trial(cap: int = DEFAULT_CAPACITY):
    def trial(r: ModeUnitary, n: int) -> Dict[str, float]:
        result = operator_norm_estimate(r, n, cap=cap)
        return {
            "op_norm": result.value,
            "op_norm_iterations": float(result.iterations),
            "op_norm_converged": 1.0 if result.converged else 0.0,
        }
    return trial


def norm_scaling_experiment(
    n_values: Sequence[int],
    m_values: Sequence[int],
    trials: int,
    seed: int,
    threads: Optional[int] = None,
    cap: int = DEFAULT_CAPACITY
) -> List[CellResult]:
    """op_norm over `trials` Haar samples per (n, m) cell; over-capacity cells are skipped."""
    runner = TrialRunner(seed=seed, trials=trials, threads=threads)
    cells = runner.run_grid(n_values, m_values, norm_trial(cap=cap), tag="NORM-SCAN")
    for cell in cells:
        if cell.skipped:
            continue
        summary = cell.summary("op_norm")
        ratio = summary.std / summary.mean if summary.mean > 0 else 0.0
        logger.info(
            f"[NORM-SCAN] n={cell.n} m={cell.m} trials={summary.count} "
            f"mean={summary.mean:.4f} std={summary.std:.4f} std/mean={ratio:.3f}"
        )
    return cells


def norm_bound_violations(cells: Iterable[CellResult]) -> List[ExperimentRecord]:
    """Trials whose op_norm exceeds N."""
    return [rec for cell in cells for rec in cell.records
            if rec.metrics.get("op_norm", 0.0) > rec.n * (1.0 + BOUND_SLACK)]


# =============================================================================
# VARIATION DISTANCE
# =============================================================================

def variation_distance(p1: ProbabilityTable, p2: ProbabilityTable) -> float:
    """sum_n |p1(n) - p2(n)| over a shared set of configs."""
    if set(p1.labels) != set(p2.labels) or len(p1.labels) != len(p2.labels):
        only_first = sorted(set(p1.labels) - set(p2.labels))[:3]
        only_second = sorted(set(p2.labels) - set(p1.labels))[:3]
        raise SupportMismatchError(
            f"tables cover different configs (only in first: {only_first}, only in second: {only_second})"
        )
    other = p2.as_dict()
    return math.fsum(abs(p - other[label]) for label, p in p1.to_rows())


def _hcb_tables(q_phi: np.ndarray, psi: np.ndarray, labels: Sequence[str]) -> Tuple[ProbabilityTable, ProbabilityTable]:
    return (ProbabilityTable(labels=labels, probabilities=np.abs(q_phi) ** 2),
            ProbabilityTable(labels=labels, probabilities=np.abs(psi) ** 2))


def distance_report(
    r: ModeUnitary,
    n: int,
    t: float = math.pi / 2,
    cap: int = DEFAULT_CAPACITY
) -> Dict[str, float]:
    """Variation distances between boson and spin outcomes for one instance.

    var_distance compares |Q phi(n)|^2 with |psi(n)|^2 over every hcb config;
    it obeys var_distance <= 2 ||Q phi|| ||delta|| + ||delta||^2 <= 3 ||delta||.
    var_distance_postselected compares the renormalised out-site tables, for
    which the guaranteed bound is 4 ||delta|| / ||Q phi_out||.
    """
    basis = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
    psi = propagate(build_spin_hamiltonian(r, basis), initial_spin_state(basis), t)
    q_phi = config_amplitudes(ProductFormState(r=r, n=n, t=t), basis)
    delta = float(np.linalg.norm(q_phi - psi.amplitudes))
    q_norm = float(np.linalg.norm(q_phi))

    boson, spin = _hcb_tables(q_phi, psi.amplitudes, basis.labels())
    distance = variation_distance(boson, spin)
    chain = 2.0 * q_norm * delta + delta ** 2

    metrics = {
        "delta_norm": delta,
        "var_distance": distance,
        "distance_chain_bound": chain,
        "distance_bound": 3.0 * delta,
    }

    rows = basis.out_only_rows()
    out_norm = float(np.linalg.norm(q_phi[rows]))
    if out_norm > 0.0 and postselect_success(psi, n) > 0.0:
        spin_out = spin_output_distribution(psi, n)
        boson_out = ProbabilityTable(labels=spin_out.labels, probabilities=np.abs(q_phi[rows]) ** 2 / out_norm ** 2)
        metrics["var_distance_postselected"] = variation_distance(boson_out, spin_out)
        metrics["postselected_bound"] = 4.0 * delta / out_norm
    return metrics


def instance_snapshot(
    r: ModeUnitary,
    n: int,
    t: float = math.pi / 2,
    cap: int = DEFAULT_CAPACITY
) -> InstanceSnapshot:
    """Q phi(t) and psi(t) on the hcb basis with the unnormalised outcome tables var_distance compares."""
    basis = enumerate_sector(r.m, n, SectorKind.HCB, cap=cap)
    psi = propagate(build_spin_hamiltonian(r, basis), initial_spin_state(basis), t)
    boson = assemble_state(ProductFormState(r=r, n=n, t=t), basis)
    boson_table, spin_table = _hcb_tables(boson.amplitudes, psi.amplitudes, basis.labels())
    return InstanceSnapshot(r=r, t=t, basis=basis, boson=boson, spin=psi,
                            boson_table=boson_table, spin_table=spin_table)


def distance_violations(metrics: Dict[str, float]) -> List[str]:
    """Names of the proved distance bounds that a report breaks."""
    broken = []
    slack = BOUND_SLACK + 1e-12
    if metrics["var_distance"] > metrics["distance_chain_bound"] * (1.0 + slack) + 1e-12:
        broken.append("distance_chain_bound")
    if metrics["var_distance"] > metrics["distance_bound"] * (1.0 + slack) + 1e-12:
        broken.append("distance_bound")
    if "var_distance_postselected" in metrics and \
            metrics["var_distance_postselected"] > metrics["postselected_bound"] * (1.0 + slack) + 1e-12:
        broken.append("postselected_bound")
    return broken


def distance_trial(t: float = math.pi / 2, cap: int = DEFAULT_CAPACITY):
    def trial(r: ModeUnitary, n: int) -> Dict[str, float]:
        metrics = distance_report(r, n, t=t, cap=cap)
        metrics["violations"] = float(len(distance_violations(metrics)))
        return metrics
    return trial


def distance_experiment(
    n_values: Sequence[int],
    m_values: Sequence[int],
    t: float,
    trials: int,
    seed: int,
    threads: Optional[int] = None,
    cap: int = DEFAULT_CAPACITY
) -> List[CellResult]:
    runner = TrialRunner(seed=seed, trials=trials, threads=threads)
    return runner.run_grid(n_values, m_values, distance_trial(t, cap=cap), tag="DISTANCE")


# =============================================================================
# ERROR BOUND
# =============================================================================

def _seed_fields(r: ModeUnitary) -> Tuple[int, int]:
    if isinstance(r.seed, tuple):
        return int(r.seed[0]), int(r.seed[1]) if len(r.seed) > 1 else 0
    return (int(r.seed) if r.seed is not None else -1), 0


def error_bound_report(
    r: ModeUnitary,
    n: int,
    t: float,
    cap: int = DEFAULT_CAPACITY,
    steps: int = BOUND_STEPS
) -> ExperimentRecord:
    """Measured ||delta(t)|| next to the envelope, the integrated bound and P_ok.

    integrated_bound = ||Q H_BS P_1bpair|| * int_0^t ||P_1bpair phi(tau)|| dtau
    (trapezoid rule on `steps` intervals). implied_constant is
    ||delta|| sqrt(M) / (t N^2).
    """
    m = r.m
    hcb = enumerate_sector(m, n, SectorKind.HCB, cap=cap)
    psi = propagate(build_spin_hamiltonian(r, hcb), initial_spin_state(hcb), t)
    q_phi = config_amplitudes(ProductFormState(r=r, n=n, t=t), hcb)
    delta = float(np.linalg.norm(q_phi - psi.amplitudes))
    hcb_weight = math.fsum((np.abs(q_phi) ** 2).tolist())

    times = uniform_grid(t, steps)
    if n >= 2:
        pair = enumerate_sector(m, n, SectorKind.ONE_B_PAIR, cap=cap)
        pair_norms = np.array([
            np.linalg.norm(config_amplitudes(ProductFormState(r=r, n=n, t=float(tau)), pair))
            for tau in times
        ])
        op_norm = operator_norm_qhp(r, n, cap=cap)
    else:
        pair_norms = np.zeros(times.size)
        op_norm = 0.0
    integrated = op_norm * integrate(pair_norms, times)

    envelope = t * n * n / math.sqrt(m)
    p_ok = postselect_success(psi, n)
    metrics = {
        "delta_norm": delta,
        "envelope": envelope,
        "integrated_bound": integrated,
        "op_norm": op_norm,
        "implied_constant": delta * math.sqrt(m) / (t * n * n) if t > 0 and n > 0 else 0.0,
        "pair_norm_max": float(pair_norms.max(initial=0.0)),
        "pair_norm_scaled": float(pair_norms.max(initial=0.0)) * math.sqrt(m) / n if n else 0.0,
        "hcb_weight": hcb_weight,
        "epsilon_weight": max(0.0, 1.0 - hcb_weight),
        "postselect_prob": p_ok,
        "one_minus_delta_sq": max(0.0, 1.0 - delta ** 2),
        "backscatter_weight": backscatter_weight(psi, n),
        "p_ok_gap": p_ok - (1.0 - delta ** 2),
    }
    seed, trial = _seed_fields(r)
    return ExperimentRecord(m=m, n=n, seed=seed, trial=trial, metrics=metrics)


def integral_bound_holds(metrics: Dict[str, float]) -> bool:
    return metrics["delta_norm"] <= metrics["integrated_bound"] * (1.0 + 1e-6) + 1e-9


TRACE_PREFIX = "trace_"


def trace_metric(k: int) -> str:
    return f"{TRACE_PREFIX}{k:03d}"


def error_trial(t: float, cap: int = DEFAULT_CAPACITY, trace_times: Optional[Sequence[float]] = None):
    """Trial function for error_bound_report; trace_times adds ||delta|| samples as trace_### metrics."""
    def trial(r: ModeUnitary, n: int) -> Dict[str, float]:
        metrics = error_bound_report(r, n, t, cap=cap).metrics
        if trace_times is not None:
            for k, (_, norm) in enumerate(delta_trace(r, n, trace_times, cap=cap)):
                metrics[trace_metric(k)] = norm
        return metrics
    return trial


def error_scan_experiment(
    n_values: Sequence[int],
    m_values: Sequence[int],
    t: float,
    trials: int,
    seed: int,
    threads: Optional[int] = None,
    cap: int = DEFAULT_CAPACITY,
    trace_times: Optional[Sequence[float]] = None
) -> List[CellResult]:
    runner = TrialRunner(seed=seed, trials=trials, threads=threads)
    fn = error_trial(t, cap=cap, trace_times=trace_times)
    return runner.run_grid(n_values, m_values, fn, tag="ERROR-SCAN")


# =============================================================================
# FITS
# =============================================================================

def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    """Least-squares (slope, intercept) of log y against log x, positive points only."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0)
    if np.count_nonzero(keep) < 2:
        return float('nan'), float('nan')
    slope, intercept = np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)
    return float(slope), float(intercept)
