"""Pure numpy implementation of the numeric kernels.

This is the fallback backend used when the compiled extension is not
available (or is disabled via ``COARSEOPS_FORCE_PURE=1``).  It implements
the same contracts as ``_ckernels``:

- spectral norms are computed by exact SVD when the smaller matrix
  dimension is at most ``SMALL_DIM``, and by power iteration on the Gram
  matrix otherwise, started from a fixed, documented seed vector;
- subset enumeration for exact quasi-locality values walks bitmasks in
  increasing order with a plain max reduction.

The compiled backend uses one-sided Jacobi rotations for the exact path;
here LAPACK does the small SVDs.  Values agree between backends to well
below every tolerance used in the package (see tests/test_kernels.py).
"""

from __future__ import annotations

import numpy as np

#: matrices whose smaller dimension is at most this are handled by exact SVD
SMALL_DIM = 8

#: golden-ratio fraction used for the deterministic power-iteration seed
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

BACKEND_NAME = "pure"


def _seed_vector(n: int) -> np.ndarray:
    """Deterministic unit start vector: all-ones with index-dependent phases.

    The phase ``exp(2*pi*1j*golden*k)`` keeps the seed from being orthogonal
    to eigenspaces aligned with coordinate patterns (e.g. sign-alternating
    vectors), which an unperturbed all-ones start is prone to.
    """
    k = np.arange(n, dtype=np.float64)
    return np.exp(2j * np.pi * _GOLDEN * k) / np.sqrt(n)


def _power_gram(m: np.ndarray, tol: float, max_iter: int):
    """Power iteration on the smaller Gram matrix of ``m``.

    Returns ``(sigma, v, residual, iterations)`` where ``v`` is the final
    unit vector on the iterated side and ``residual`` bounds the distance
    of ``sigma`` from the singular value nearest the Rayleigh quotient.
    """
    rows, cols = m.shape
    use_cols = cols <= rows
    n = cols if use_cols else rows
    v = _seed_vector(n)
    sigma = 0.0
    res_sigma = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        if use_cols:
            w = m.conj().T @ (m @ v)
        else:
            w = m @ (m.conj().T @ v)
        lam = float(np.real(np.vdot(v, w)))
        res_vec = float(np.linalg.norm(w - lam * v))
        sigma = float(np.sqrt(max(lam, 0.0)))
        res_sigma = res_vec / (2.0 * sigma) if sigma > 0 else float(np.sqrt(res_vec))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0, v, 0.0, it
        v = w / nw
        if res_sigma <= tol:
            break
    return sigma, v, res_sigma, it


def spectral_norm(m: np.ndarray, tol: float = 1e-12, max_iter: int = 50_000):
    """Spectral norm of a complex matrix.

    Returns ``(value, residual, iterations)``.  ``iterations`` is 0 on the
    exact-SVD path.
    """
    m = np.ascontiguousarray(m, dtype=np.complex128)
    if m.size == 0 or not m.any():
        return 0.0, 0.0, 0
    if min(m.shape) <= SMALL_DIM:
        value = float(np.linalg.svd(m, compute_uv=False)[0])
        return value, value * 1e-14, 0
    sigma, _v, res, it = _power_gram(m, tol, max_iter)
    return sigma, res, it


def top_singular(m: np.ndarray, tol: float = 1e-12, max_iter: int = 50_000):
    """Top singular triple ``(u, sigma, v, residual, iterations)`` with
    ``m @ v ~= sigma * u`` and unit ``u``, ``v``."""
    m = np.ascontiguousarray(m, dtype=np.complex128)
    if m.size == 0 or not m.any():
        raise ValueError("top_singular undefined for the zero matrix")
    rows, cols = m.shape
    if min(rows, cols) <= SMALL_DIM:
        uu, ss, vh = np.linalg.svd(m)
        u = uu[:, 0]
        v = vh[0].conj()
        sigma = float(ss[0])
        res = float(np.linalg.norm(m @ v - sigma * u))
        return u, sigma, v, res, 0
    sigma, x, res, it = _power_gram(m, tol, max_iter)
    if cols <= rows:
        v = x
        mv = m @ v
        nu = float(np.linalg.norm(mv))
        u = mv / nu if nu > 0 else np.zeros(rows, dtype=np.complex128)
    else:
        u = x
        mu = m.conj().T @ u
        nv = float(np.linalg.norm(mu))
        v = mu / nv if nv > 0 else np.zeros(cols, dtype=np.complex128)
    res = float(np.linalg.norm(m @ v - sigma * u))
    return u, sigma, v, res, it


def singular_values(m: np.ndarray) -> np.ndarray:
    """All singular values, descending."""
    m = np.ascontiguousarray(m, dtype=np.complex128)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def block_norms(m: np.ndarray, row_off: np.ndarray, col_off: np.ndarray) -> np.ndarray:
    """Spectral norm of every (row block, column block) submatrix.

    ``row_off``/``col_off`` are cumulative fiber offsets of length
    ``n_blocks + 1``; returns an ``(n_rows_blocks, n_col_blocks)`` table.
    """
    m = np.ascontiguousarray(m, dtype=np.complex128)
    ny = len(row_off) - 1
    nx = len(col_off) - 1
    out = np.zeros((ny, nx))
    for i in range(ny):
        r0, r1 = row_off[i], row_off[i + 1]
        if r1 == r0:
            continue
        for j in range(nx):
            c0, c1 = col_off[j], col_off[j + 1]
            if c1 == c0:
                continue
            blk = m[r0:r1, c0:c1]
            if r1 - r0 == 1 or c1 - c0 == 1:
                out[i, j] = float(np.linalg.norm(blk))
            else:
                out[i, j] = float(np.linalg.svd(blk, compute_uv=False)[0])
    return out


def masked_norm(m: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    """Spectral norm of the submatrix on the given row/column index sets."""
    if len(rows) == 0 or len(cols) == 0:
        return 0.0
    sub = np.ascontiguousarray(m[np.ix_(rows, cols)], dtype=np.complex128)
    return spectral_norm(sub)[0]


def ql_exact(
    m: np.ndarray,
    row_off: np.ndarray,
    col_off: np.ndarray,
    nbr_masks: np.ndarray,
) -> float:
    """Exact quasi-locality value by enumeration of all cut-down pairs.

    For every nonempty subset ``B`` of the (at most 20) target points, the
    column set is the complement of the neighborhood ``N(B)`` given by
    OR-ing ``nbr_masks`` over ``B``, and the max block-cut norm is returned.
    """
    n_t = len(row_off) - 1
    n_s = len(col_off) - 1
    if n_t > 20:
        raise ValueError("exact enumeration capped at 20 target points")
    masks = [int(x) for x in nbr_masks]
    full = (1 << n_s) - 1
    row_idx = [np.arange(row_off[i], row_off[i + 1]) for i in range(n_t)]
    col_idx = [np.arange(col_off[j], col_off[j + 1]) for j in range(n_s)]
    best = 0.0
    for bmask in range(1, 1 << n_t):
        nbh = 0
        bm = bmask
        while bm:
            i = (bm & -bm).bit_length() - 1
            nbh |= masks[i]
            bm &= bm - 1
        amask = full & ~nbh
        if amask == 0:
            continue
        rows = np.concatenate([row_idx[i] for i in range(n_t) if bmask >> i & 1])
        cols = np.concatenate([col_idx[j] for j in range(n_s) if amask >> j & 1])
        if len(rows) == 0 or len(cols) == 0:
            continue
        val = masked_norm(m, rows, cols)
        if val > best:
            best = val
    return best
