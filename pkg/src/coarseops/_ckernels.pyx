# Compiled numeric kernels: spectral norms (one-sided complex Jacobi SVD for
# small matrices, Gram power iteration otherwise), per-block norm tables, and
# the bitmask enumeration behind exact quasi-locality values.
#
# The API and the algorithmic choices mirror _purekernels.py; the Jacobi
# path replaces LAPACK so that small-instance results do not depend on the
# installed BLAS.

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, cos, sin, M_PI

cnp.import_array()

SMALL_DIM = 8
BACKEND_NAME = "compiled"

cdef double _GOLDEN = (sqrt(5.0) - 1.0) / 2.0
cdef double _JACOBI_EPS = 1e-13
cdef int _JACOBI_SWEEPS = 64


# ---------------------------------------------------------------------------
# one-sided Jacobi on the leading (m, n) block of a scratch buffer
# ---------------------------------------------------------------------------

cdef int _jacobi(double complex[:, :] w, double complex[:, :] v,
                 Py_ssize_t m, Py_ssize_t n, bint want_v) except -1:
    """Orthogonalize the columns of ``w`` in place; accumulate rotations
    into ``v`` when requested.  Returns the number of sweeps used."""
    cdef Py_ssize_t p, q, i, sweep
    cdef double app, aqq, mod, tau, t, cs, sn
    cdef double complex apq, alpha, wp, wq, tmp_p, tmp_q
    cdef bint rotated
    if want_v:
        for p in range(n):
            for q in range(n):
                v[p, q] = 1.0 if p == q else 0.0
    for sweep in range(_JACOBI_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = 0.0
                aqq = 0.0
                apq = 0.0
                for i in range(m):
                    wp = w[i, p]
                    wq = w[i, q]
                    app += wp.real * wp.real + wp.imag * wp.imag
                    aqq += wq.real * wq.real + wq.imag * wq.imag
                    apq += (wp.real - 1j * wp.imag) * wq
                mod = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if mod <= _JACOBI_EPS * sqrt(app * aqq) or mod == 0.0:
                    continue
                rotated = True
                alpha = apq / mod
                tau = (aqq - app) / (2.0 * mod)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = t * cs
                # conj(alpha) folds the phase of <w_p, w_q> into column q
                alpha = alpha.real - 1j * alpha.imag
                for i in range(m):
                    tmp_p = w[i, p]
                    tmp_q = alpha * w[i, q]
                    w[i, p] = cs * tmp_p - sn * tmp_q
                    w[i, q] = sn * tmp_p + cs * tmp_q
                if want_v:
                    for i in range(n):
                        tmp_p = v[i, p]
                        tmp_q = alpha * v[i, q]
                        v[i, p] = cs * tmp_p - sn * tmp_q
                        v[i, q] = sn * tmp_p + cs * tmp_q
        if not rotated:
            return sweep + 1
    return _JACOBI_SWEEPS


cdef double _jacobi_norm(double complex[:, :] w, Py_ssize_t m, Py_ssize_t n) except -1.0:
    """Spectral norm of the leading (m, n) block; the buffer is destroyed."""
    cdef Py_ssize_t i, j
    cdef double best, cur
    cdef double complex x
    _jacobi(w, w[:0, :0], m, n, False)
    best = 0.0
    for j in range(n):
        cur = 0.0
        for i in range(m):
            x = w[i, j]
            cur += x.real * x.real + x.imag * x.imag
        if cur > best:
            best = cur
    return sqrt(best)


# ---------------------------------------------------------------------------
# Gram power iteration
# ---------------------------------------------------------------------------

cdef _power(double complex[:, ::1] m, double tol, int max_iter):
    """Power iteration on the smaller Gram matrix.

    Returns (sigma, v_array_on_iterated_side, use_cols, residual, iters).
    """
    cdef Py_ssize_t rows = m.shape[0], cols = m.shape[1]
    cdef bint use_cols = cols <= rows
    cdef Py_ssize_t n = cols if use_cols else rows
    cdef Py_ssize_t other = rows if use_cols else cols
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] v_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] mid_arr = np.empty(other, dtype=np.complex128)
    cdef double complex[:] v = v_arr
    cdef double complex[:] w = w_arr
    cdef double complex[:] mid = mid_arr
    cdef Py_ssize_t i, j
    cdef int it = 0
    cdef double lam, res_vec, sigma = 0.0, res_sigma = 0.0, nw, ang
    cdef double complex acc, diff

    for i in range(n):
        ang = 2.0 * M_PI * _GOLDEN * i
        v[i] = (cos(ang) + 1j * sin(ang)) / sqrt(<double> n)

    for it in range(1, max_iter + 1):
        if use_cols:
            for i in range(other):
                acc = 0.0
                for j in range(n):
                    acc += m[i, j] * v[j]
                mid[i] = acc
            for j in range(n):
                acc = 0.0
                for i in range(other):
                    acc += (m[i, j].real - 1j * m[i, j].imag) * mid[i]
                w[j] = acc
        else:
            for i in range(other):
                acc = 0.0
                for j in range(n):
                    acc += (m[j, i].real - 1j * m[j, i].imag) * v[j]
                mid[i] = acc
            for j in range(n):
                acc = 0.0
                for i in range(other):
                    acc += m[j, i] * mid[i]
                w[j] = acc
        lam = 0.0
        for j in range(n):
            lam += ((v[j].real - 1j * v[j].imag) * w[j]).real
        res_vec = 0.0
        for j in range(n):
            diff = w[j] - lam * v[j]
            res_vec += diff.real * diff.real + diff.imag * diff.imag
        res_vec = sqrt(res_vec)
        sigma = sqrt(lam) if lam > 0 else 0.0
        res_sigma = res_vec / (2.0 * sigma) if sigma > 0 else sqrt(res_vec)
        nw = 0.0
        for j in range(n):
            nw += w[j].real * w[j].real + w[j].imag * w[j].imag
        nw = sqrt(nw)
        if nw == 0.0:
            return 0.0, v_arr, use_cols, 0.0, it
        for j in range(n):
            v[j] = w[j] / nw
        if res_sigma <= tol:
            break
    return sigma, v_arr, use_cols, res_sigma, it


# ---------------------------------------------------------------------------
# public API (mirrors _purekernels)
# ---------------------------------------------------------------------------

def spectral_norm(m, double tol=1e-12, int max_iter=50_000):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.size == 0 or not a.any():
        return 0.0, 0.0, 0
    cdef double value
    if min(a.shape[0], a.shape[1]) <= SMALL_DIM:
        value = _jacobi_norm(a.copy(), a.shape[0], a.shape[1])
        return value, value * 1e-14, 0
    sigma, _v, _uc, res, it = _power(a, tol, max_iter)
    return sigma, res, it


def top_singular(m, double tol=1e-12, int max_iter=50_000):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.size == 0 or not a.any():
        raise ValueError("top_singular undefined for the zero matrix")
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] w
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] vacc
    cdef bint transposed = False
    cdef Py_ssize_t top, j
    if min(rows, cols) <= SMALL_DIM:
        # one-sided Jacobi orthogonalizes columns; keep the column count small
        if cols <= rows:
            w = a.copy()
        else:
            w = np.ascontiguousarray(a.conj().T)
            transposed = True
        vacc = np.empty((w.shape[1], w.shape[1]), dtype=np.complex128)
        _jacobi(w, vacc, w.shape[0], w.shape[1], True)
        norms = np.linalg.norm(w, axis=0)
        top = int(np.argmax(norms))
        sigma = float(norms[top])
        if sigma == 0.0:
            raise ValueError("top_singular undefined for the zero matrix")
        left = w[:, top] / sigma
        right = vacc[:, top]
        if transposed:
            u, v = right, left
        else:
            u, v = left, right
        res = float(np.linalg.norm(a @ v - sigma * u))
        return u, sigma, v, res, 0
    sigma, x, use_cols, res, it = _power(a, tol, max_iter)
    if use_cols:
        v = x
        mv = a @ v
        nu = float(np.linalg.norm(mv))
        u = mv / nu if nu > 0 else np.zeros(rows, dtype=np.complex128)
    else:
        u = x
        mu = a.conj().T @ u
        nv = float(np.linalg.norm(mu))
        v = mu / nv if nv > 0 else np.zeros(cols, dtype=np.complex128)
    res = float(np.linalg.norm(a @ v - sigma * u))
    return u, sigma, v, res, it


def singular_values(m):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.size == 0:
        return np.zeros(0)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] w
    if a.shape[1] <= a.shape[0]:
        w = a.copy()
    else:
        w = np.ascontiguousarray(a.conj().T)
    _jacobi(w, w[:0, :0], w.shape[0], w.shape[1], False)
    s = np.linalg.norm(w, axis=0)
    s.sort()
    return s[::-1].copy()


def block_norms(m, row_off, col_off):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.ascontiguousarray(m, dtype=np.complex128)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] roff = np.ascontiguousarray(row_off, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] coff = np.ascontiguousarray(col_off, dtype=np.int64)
    cdef Py_ssize_t ny = roff.shape[0] - 1, nx = coff.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((ny, nx))
    cdef Py_ssize_t i, j, r0, r1, c0, c1, ii, jj, mr, mc
    cdef Py_ssize_t maxr = 0, maxc = 0
    cdef double acc
    cdef double complex x
    for i in range(ny):
        if roff[i + 1] - roff[i] > maxr:
            maxr = roff[i + 1] - roff[i]
    for j in range(nx):
        if coff[j + 1] - coff[j] > maxc:
            maxc = coff[j + 1] - coff[j]
    if maxr == 0 or maxc == 0:
        return out
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] scratch = np.empty((maxr, maxc), dtype=np.complex128)
    cdef double complex[:, :] sc = scratch
    for i in range(ny):
        r0 = roff[i]
        r1 = roff[i + 1]
        mr = r1 - r0
        if mr == 0:
            continue
        for j in range(nx):
            c0 = coff[j]
            c1 = coff[j + 1]
            mc = c1 - c0
            if mc == 0:
                continue
            if mr == 1 or mc == 1:
                acc = 0.0
                for ii in range(mr):
                    for jj in range(mc):
                        x = a[r0 + ii, c0 + jj]
                        acc += x.real * x.real + x.imag * x.imag
                out[i, j] = sqrt(acc)
            else:
                for ii in range(mr):
                    for jj in range(mc):
                        sc[ii, jj] = a[r0 + ii, c0 + jj]
                out[i, j] = _jacobi_norm(sc, mr, mc)
    return out


def masked_norm(m, rows, cols):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ri = np.ascontiguousarray(rows, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ci = np.ascontiguousarray(cols, dtype=np.int64)
    if ri.shape[0] == 0 or ci.shape[0] == 0:
        return 0.0
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.ascontiguousarray(m, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] sub = np.ascontiguousarray(a[np.ix_(ri, ci)])
    if min(sub.shape[0], sub.shape[1]) <= SMALL_DIM:
        return float(_jacobi_norm(sub, sub.shape[0], sub.shape[1]))
    sigma, _v, _uc, _res, _it = _power(sub, 1e-12, 50_000)
    return float(sigma)


def ql_exact(m, row_off, col_off, nbr_masks):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.ascontiguousarray(m, dtype=np.complex128)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] roff = np.ascontiguousarray(row_off, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] coff = np.ascontiguousarray(col_off, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] nbr = np.ascontiguousarray(nbr_masks, dtype=np.uint64)
    cdef Py_ssize_t n_t = roff.shape[0] - 1, n_s = coff.shape[0] - 1
    if n_t > 20:
        raise ValueError("exact enumeration capped at 20 target points")
    if n_s > 63:
        raise ValueError("exact enumeration capped at 63 source points")
    cdef unsigned long long full = (<unsigned long long> 1 << n_s) - 1
    cdef unsigned long long bmask, amask, nbh, bm
    cdef Py_ssize_t i, j, ii, jj, mr, mc, r0, c0
    cdef double best = 0.0, val
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] scratch = np.empty(
        (a.shape[0], a.shape[1]), dtype=np.complex128)
    cdef double complex[:, :] sc = scratch
    cdef double complex[:, ::1] av = a
    for bmask in range(1, <unsigned long long> 1 << n_t):
        nbh = 0
        bm = bmask
        while bm:
            i = _ctz(bm)
            nbh |= nbr[i]
            bm &= bm - 1
        amask = full & ~nbh
        if amask == 0:
            continue
        # gather rows of B-fibers and columns of A-fibers into the scratch
        mr = 0
        for i in range(n_t):
            if bmask >> i & 1:
                for ii in range(roff[i], roff[i + 1]):
                    mc = 0
                    for j in range(n_s):
                        if amask >> j & 1:
                            for jj in range(coff[j], coff[j + 1]):
                                sc[mr, mc] = av[ii, jj]
                                mc += 1
                    mr += 1
        if mr == 0:
            continue
        mc = 0
        for j in range(n_s):
            if amask >> j & 1:
                mc += coff[j + 1] - coff[j]
        if mc == 0:
            continue
        val = _jacobi_norm(sc, mr, mc)
        if val > best:
            best = val
    return best


cdef inline Py_ssize_t _ctz(unsigned long long x):
    cdef Py_ssize_t k = 0
    while not (x & 1):
        x >>= 1
        k += 1
    return k
