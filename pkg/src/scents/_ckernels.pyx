# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from scipy.linalg.cython_blas cimport ddot, daxpy

cnp.import_array()


cdef Py_ssize_t _find_span(const double[::1] knots, int p, Py_ssize_t n_basis, double x) noexcept nogil:
    cdef Py_ssize_t lo = p, hi = n_basis, mid
    if x >= knots[n_basis]:
        return n_basis - 1
    # binary search for knots[i] <= x < knots[i+1]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x < knots[mid]:
            hi = mid
        else:
            lo = mid
    return lo


def bspline_design(knots, int degree, x):
    cdef const double[::1] t = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef int p = degree
    cdef Py_ssize_t m = xv.shape[0]
    cdef Py_ssize_t n_basis = t.shape[0] - p - 1
    B_arr = np.zeros((m, n_basis))
    dB_arr = np.zeros((m, n_basis))
    cdef double[:, ::1] B = B_arr
    cdef double[:, ::1] dB = dB_arr
    cdef double[::1] N = np.zeros(p + 1)
    cdef double[::1] lower = np.zeros(p + 1)
    cdef double[::1] left = np.zeros(p + 1)
    cdef double[::1] right = np.zeros(p + 1)
    cdef double lo = t[0], hi = t[t.shape[0] - 1]
    cdef Py_ssize_t i, span, k
    cdef int j, r
    cdef double xi, saved, temp, denom, d, val

    with nogil:
        for i in range(m):
            xi = xv[i]
            if not (xi >= lo and xi <= hi):
                continue
            span = _find_span(t, p, n_basis, xi)
            N[0] = 1.0
            for j in range(1, p + 1):
                if j == p:
                    for r in range(p):
                        lower[r] = N[r]
                left[j] = xi - t[span + 1 - j]
                right[j] = t[span + j] - xi
                saved = 0.0
                for r in range(j):
                    denom = right[r + 1] + left[j - r]
                    temp = N[r] / denom if denom != 0.0 else 0.0
                    N[r] = saved + right[r + 1] * temp
                    saved = left[j - r] * temp
                N[j] = saved
            for r in range(p + 1):
                k = span - p + r
                B[i, k] = N[r]
                val = 0.0
                if r >= 1:
                    d = t[k + p] - t[k]
                    if d != 0.0:
                        val += p * lower[r - 1] / d
                if r <= p - 1:
                    d = t[k + p + 1] - t[k + 1]
                    if d != 0.0:
                        val -= p * lower[r] / d
                dB[i, k] = val
    return B_arr, dB_arr


def lasso_cd(X, y, double lam, weights, double[::1] beta, int max_iter, double tol):
    cdef double[::1, :] Xf = np.asfortranarray(X, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int n = Xf.shape[0], p = Xf.shape[1]
    cdef double[::1] r = np.ascontiguousarray(np.asarray(y, dtype=np.float64) - np.asarray(Xf) @ np.asarray(beta))
    cdef double[::1] col_sq = np.einsum("ij,ij->j", np.asarray(Xf), np.asarray(Xf)) / n
    cdef double[::1] trace = np.empty(max_iter + 1)
    cdef int inc = 1, j, n_iter = 0
    cdef bint converged = False, full = True
    cdef double z, new, delta, change, max_change, thr, neg, pen, cj
    cdef double inv_n = 1.0 / n

    with nogil:
        pen = 0.0
        for j in range(p):
            pen += w[j] * fabs(beta[j])
        trace[0] = 0.5 * ddot(&n, &r[0], &inc, &r[0], &inc) * inv_n + lam * pen
        while n_iter < max_iter:
            max_change = 0.0
            for j in range(p):
                cj = col_sq[j]
                if cj == 0.0:
                    continue
                if not full and beta[j] == 0.0:
                    continue
                z = ddot(&n, &Xf[0, j], &inc, &r[0], &inc) * inv_n + cj * beta[j]
                thr = lam * w[j]
                if z > thr:
                    new = (z - thr) / cj
                elif z < -thr:
                    new = (z + thr) / cj
                else:
                    new = 0.0
                delta = new - beta[j]
                if delta != 0.0:
                    neg = -delta
                    daxpy(&n, &neg, &Xf[0, j], &inc, &r[0], &inc)
                    beta[j] = new
                    change = fabs(delta)
                    if change > max_change:
                        max_change = change
            n_iter += 1
            pen = 0.0
            for j in range(p):
                pen += w[j] * fabs(beta[j])
            trace[n_iter] = 0.5 * ddot(&n, &r[0], &inc, &r[0], &inc) * inv_n + lam * pen
            if max_change < tol:
                if full:
                    converged = True
                    break
                full = True
            else:
                full = False
    return n_iter, bool(converged), np.asarray(trace[: n_iter + 1]).copy()
