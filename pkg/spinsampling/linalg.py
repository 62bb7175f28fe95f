"""
Linear-algebra kernels shared by the dynamics modules.

- Propagator: exp(-iHt)|v> by dense eigendecomposition for small H,
  adaptive Lanczos (Krylov) stepping for large sparse H
- largest_singular_value: Lanczos-accelerated power iteration on the Gram
  operator A^+A, stopped on the Gram residual
- trapezoid integration on a time grid
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from loguru import logger
from scipy.integrate import trapezoid

from .errors import ConvergenceError

DENSE_LIMIT = 4000
KRYLOV_TOLERANCE = 1e-10
KRYLOV_DIM = 30

POWER_TOLERANCE = 1e-8
POWER_MAX_ITER = 10_000
# Lanczos vectors per power sweep.
POWER_BLOCK = 20

# Lanczos stops early when the residual drops below this (invariant subspace).
_BREAKDOWN = 1e-13

Operator = Union[np.ndarray, sp.spmatrix]


# =============================================================================
# TIME EVOLUTION
# =============================================================================

def lanczos(h: Operator, v: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """k-step Lanczos with full reorthogonalisation.

    Returns the Krylov basis V (n x k'), the tridiagonal diagonal alpha (k'),
    off-diagonal beta (k'-1), and the residual norm beyond the last vector.
    """
    n = v.shape[0]
    k = max(1, min(k, n))
    basis = np.zeros((n, k), dtype=complex)
    alpha = np.zeros(k)
    beta = np.zeros(k)
    basis[:, 0] = v / np.linalg.norm(v)

    used = k
    residual = 0.0
    for i in range(k):
        w = h @ basis[:, i]
        alpha[i] = float(np.real(np.vdot(basis[:, i], w)))
        w = w - alpha[i] * basis[:, i]
        if i > 0:
            w = w - beta[i - 1] * basis[:, i - 1]
        w = w - basis[:, :i + 1] @ (basis[:, :i + 1].conj().T @ w)
        residual = float(np.linalg.norm(w))
        if i == k - 1 or residual < _BREAKDOWN:
            used = i + 1
            break
        beta[i] = residual
        basis[:, i + 1] = w / residual
    return basis[:, :used], alpha[:used], beta[:used - 1], residual


def _tridiagonal_exp_first_column(alpha: np.ndarray, beta: np.ndarray, step: float) -> np.ndarray:
    if alpha.size == 1:
        return np.array([np.exp(-1j * alpha[0] * step)])
    evals, evecs = scipy.linalg.eigh_tridiagonal(alpha, beta)
    return evecs @ (np.exp(-1j * evals * step) * evecs[0, :])


def krylov_expm_multiply(
    h: Operator,
    v: np.ndarray,
    t: float,
    tol: float = KRYLOV_TOLERANCE,
    krylov_dim: int = KRYLOV_DIM
) -> np.ndarray:
    """exp(-iHt)|v> by adaptive Lanczos steps with per-step error <= tol."""
    psi = np.asarray(v, dtype=complex).copy()
    if t == 0.0 or not np.any(psi):
        return psi

    direction = np.sign(t)
    remaining = abs(t)
    step = remaining
    steps = 0
    while remaining > 0.0:
        norm = np.linalg.norm(psi)
        basis, alpha, beta, residual = lanczos(h, psi, krylov_dim)
        step = min(step, remaining)
        while True:
            coeffs = _tridiagonal_exp_first_column(alpha, beta, direction * step)
            error = norm * residual * abs(coeffs[-1])
            if error <= tol or residual < _BREAKDOWN:
                break
            step *= 0.5
        psi = norm * (basis @ coeffs)
        remaining -= step
        steps += 1
        # Let the step grow again after an easy step.
        if error < 0.1 * tol:
            step *= 1.5
    logger.debug(f"[KRYLOV] dim={psi.shape[0]} t={t:.4g} steps={steps}")
    return psi


class Propagator:
    """exp(-iHt) applied to vectors for one Hermitian H.

    Dense eigendecomposition (computed once) when dim <= dense_limit,
    otherwise Lanczos stepping on the sparse matrix.
    """

    def __init__(
        self,
        h: Operator,
        dense_limit: int = DENSE_LIMIT,
        tol: float = KRYLOV_TOLERANCE
    ):
        self.dim = h.shape[0]
        self.tol = tol
        self.method = "dense" if self.dim <= dense_limit else "krylov"
        self._h = h
        self._evals: Optional[np.ndarray] = None
        self._evecs: Optional[np.ndarray] = None
        if self.method == "dense" and self.dim:
            dense = h.toarray() if sp.issparse(h) else np.asarray(h)
            self._evals, self._evecs = np.linalg.eigh(dense)

    @property
    def eigenvalues(self) -> Optional[np.ndarray]:
        return self._evals

    def apply(self, v: np.ndarray, t: float) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if t == 0.0 or self.dim == 0:
            return v.copy()
        if self.method == "dense":
            coeffs = self._evecs.conj().T @ v
            return self._evecs @ (np.exp(-1j * self._evals * t) * coeffs)
        return krylov_expm_multiply(self._h, v, t, tol=self.tol)


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Dense exp(-iHt) for a Hermitian matrix."""
    evals, evecs = np.linalg.eigh(np.asarray(h))
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


# =============================================================================
# LARGEST SINGULAR VALUE
# =============================================================================

@dataclass
class PowerIterationResult:
    """Outcome of a power-iteration run."""
    value: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "iterations": self.iterations,
            "converged": self.converged
        }


def _gram_operator(a: Operator) -> spla.LinearOperator:
    op = spla.aslinearoperator(a)
    return op.adjoint() @ op


def largest_singular_value(
    a: Operator,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITER,
    seed: int = 0,
    strict: bool = False,
    block: int = POWER_BLOCK
) -> PowerIterationResult:
    """sigma_max(A) by power iteration on the Gram operator G = A^+A from a seeded start.

    Each sweep expands the iterate into a Lanczos block of G and keeps the
    leading Ritz vector, so nearly degenerate top singular values do not stall
    it. Stops on the Gram residual ||G v - sigma^2 v|| <= tol sigma^2, which
    bounds the relative error of sigma by tol. `iterations` counts
    applications of G. Non-convergence is logged, or raised when strict=True.
    """
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return PowerIterationResult(value=0.0, iterations=0, converged=True)

    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.standard_normal(cols) + 1j * rng.standard_normal(cols)
    v /= np.linalg.norm(v)
    a_h = a.conj().T
    gram = _gram_operator(a)

    sigma = 0.0
    applied = 0
    while applied < max_iter:
        k = max(1, min(block, cols, max_iter - applied - 1))
        basis, alpha, beta, _ = lanczos(gram, v, k)
        applied += basis.shape[1]
        if alpha.size == 1:
            v = basis[:, 0]
        else:
            _, ritz = scipy.linalg.eigh_tridiagonal(alpha, beta)
            v = basis @ ritz[:, -1]
            v /= np.linalg.norm(v)

        av = a @ v
        sigma_sq = float(np.real(np.vdot(av, av)))
        sigma = float(np.sqrt(sigma_sq))
        if sigma_sq == 0.0:
            return PowerIterationResult(value=0.0, iterations=applied, converged=True)
        residual = float(np.linalg.norm(a_h @ av - sigma_sq * v))
        applied += 1
        if residual <= tol * sigma_sq:
            return PowerIterationResult(value=sigma, iterations=applied, converged=True)

    message = f"[POWER] did not converge after {max_iter} iterations (sigma~{sigma:.6g})"
    if strict:
        raise ConvergenceError(message)
    logger.warning(message)
    return PowerIterationResult(value=sigma, iterations=applied, converged=False)


# =============================================================================
# QUADRATURE
# =============================================================================

def uniform_grid(t: float, steps: int) -> np.ndarray:
    """steps + 1 equally spaced points on [0, t]."""
    return np.linspace(0.0, t, steps + 1)


def integrate(values: np.ndarray, times: np.ndarray) -> float:
    """Trapezoid rule over a time grid."""
    return float(trapezoid(np.asarray(values, dtype=float), np.asarray(times, dtype=float)))
