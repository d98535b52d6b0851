"""Dense complex linear algebra used by the rest of the package.

Everything runs through the kernel backend (compiled when available):
spectral norms with a certified residual, top singular pairs, and a
projected-subgradient solver for the nearest matrix supported on a given
sparsity pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class NormEstimate:
    """Spectral-norm estimate with a convergence certificate.

    ``value`` lies within ``residual`` of the true norm: exact-SVD results
    carry a machine-epsilon residual, power-iteration results the Rayleigh
    bracket radius at the final iterate.
    """

    value: float
    residual: float
    iterations: int


def as_matrix(m) -> np.ndarray:
    a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    return a


def op_norm(m, tol: float = 1e-10) -> NormEstimate:
    """Spectral norm of a complex matrix.

    Matrices whose smaller dimension is at most 8 go through exact SVD;
    larger ones through power iteration on the Gram matrix from the fixed
    phase-perturbed seed, iterated until the residual drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    value, residual, iterations = kernels.spectral_norm(as_matrix(m), tol)
    return NormEstimate(float(value), float(residual), int(iterations))


def top_singular_pair(m, tol: float = 1e-10):
    """Top singular triple ``(u, sigma, v)`` with ``m @ v == sigma * u``
    up to ``tol``; raises on the zero matrix."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    u, sigma, v, _res, _it = kernels.top_singular(as_matrix(m), tol)
    return u, float(sigma), v


def singular_values(m) -> np.ndarray:
    """All singular values in descending order (exact, full decomposition)."""
    return np.asarray(kernels.singular_values(as_matrix(m)), dtype=np.float64)


def adjoint(m) -> np.ndarray:
    return as_matrix(m).conj().T


@dataclass(frozen=True)
class BandNearnessResult:
    """Outcome of the pattern-constrained nearness solve.

    ``dist`` is the norm of the residual at the best iterate (always an
    upper bound for the true distance), ``lower`` the caller-supplied lower
    bound, so ``lower <= optimum <= dist`` is guaranteed.
    """

    matrix: np.ndarray
    dist: float
    lower: float
    converged: bool
    iterations: int


def band_nearness(
    t,
    pattern: np.ndarray,
    iters: int = 200,
    tol: float = 1e-10,
    lower: float = 0.0,
) -> BandNearnessResult:
    """Distance from ``t`` to matrices supported on the boolean ``pattern``.

    Minimizes ``sigma_max(t - s)`` over ``s`` vanishing off the pattern by
    projected subgradient steps on the top singular dyad, started from the
    truncation of ``t`` to the pattern (a feasible point, so the reported
    distance never exceeds the off-pattern residual norm).  With a positive
    ``lower`` bound the Polyak step is used, otherwise a diminishing
    ``c / sqrt(k)`` schedule.
    """
    t = as_matrix(t)
    pattern = np.asarray(pattern, dtype=bool)
    if pattern.shape != t.shape:
        raise ValueError("pattern shape must match the matrix")
    s = np.where(pattern, t, 0.0)
    best_s = s.copy()
    best_f = op_norm(t - s, tol=min(tol, 1e-10)).value
    if best_f <= lower + tol or not pattern.any() or pattern.all():
        return BandNearnessResult(best_s, best_f, lower, True, 0)
    step_c = best_f
    used = 0
    for k in range(1, iters + 1):
        used = k
        residual = t - s
        if not residual.any():
            best_s, best_f = s.copy(), 0.0
            break
        u, sigma, v = top_singular_pair(residual, tol=min(tol, 1e-8))
        if sigma < best_f:
            best_f = sigma
            best_s = s.copy()
            if best_f <= lower + tol:
                break
        grad = np.where(pattern, np.outer(u, v.conj()), 0.0)
        gnorm2 = float(np.vdot(grad, grad).real)
        if gnorm2 <= 1e-30:
            break
        if lower > 0.0:
            alpha = (sigma - lower) / gnorm2
        else:
            alpha = step_c / np.sqrt(k)
        s = s + alpha * grad
    converged = best_f <= lower + max(tol, 1e-12)
    return BandNearnessResult(best_s, best_f, lower, converged, used)
