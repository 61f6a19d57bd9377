"""Pure NumPy implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them line for line
and must agree to rounding error.
"""
import numpy as np


def find_span(knots, degree, x):
    """Index ``i`` with ``knots[i] <= x < knots[i+1]``; right endpoint goes to the last span."""
    n_basis = len(knots) - degree - 1
    span = np.searchsorted(knots, x, side="right") - 1
    return np.clip(span, degree, n_basis - 1)


def bspline_design(knots, degree, x):
    """Unscaled B-spline values and first derivatives at the points ``x``.

    Points outside ``[knots[0], knots[-1]]`` give zero rows. Returns two arrays of
    shape ``(len(x), len(knots) - degree - 1)``.
    """
    knots = np.asarray(knots, dtype=float)
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    p = degree
    n_basis = len(knots) - p - 1
    B = np.zeros((m, n_basis))
    dB = np.zeros((m, n_basis))
    inside = (x >= knots[0]) & (x <= knots[-1])
    if m == 0 or not inside.any():
        return B, dB
    xi = x[inside]
    span = find_span(knots, p, xi)
    mi = xi.shape[0]

    # local triangular Cox-de Boor; N[:, r] holds basis span-j+r at stage j
    N = np.zeros((mi, p + 1))
    N[:, 0] = 1.0
    left = np.zeros((mi, p + 1))
    right = np.zeros((mi, p + 1))
    lower = None
    for j in range(1, p + 1):
        if j == p:
            lower = N[:, :p].copy()
        left[:, j] = xi - knots[span + 1 - j]
        right[:, j] = knots[span + j] - xi
        saved = np.zeros(mi)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = np.divide(N[:, r], denom, out=np.zeros(mi), where=denom != 0)
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    if p == 0:
        lower = np.zeros((mi, 0))

    # derivative from the degree p-1 values: p/(t[k+p]-t[k]) N_{k,p-1} - p/(t[k+p+1]-t[k+1]) N_{k+1,p-1}
    dN = np.zeros((mi, p + 1))
    for r in range(p + 1):
        k = span - p + r
        if r >= 1:
            a = lower[:, r - 1]
            d1 = knots[k + p] - knots[k]
            dN[:, r] += p * np.divide(a, d1, out=np.zeros(mi), where=d1 != 0)
        if r <= p - 1:
            b = lower[:, r]
            d2 = knots[k + p + 1] - knots[k + 1]
            dN[:, r] -= p * np.divide(b, d2, out=np.zeros(mi), where=d2 != 0)

    rows = np.flatnonzero(inside)
    cols = span[:, None] - p + np.arange(p + 1)[None, :]
    B[rows[:, None], cols] = N
    dB[rows[:, None], cols] = dN
    return B, dB


def lasso_cd(X, y, lam, weights, beta, max_iter, tol):
    """Cyclic coordinate descent for ``(1/2n)||y - X b||^2 + lam * sum_j w_j |b_j|``.

    ``beta`` is updated in place. Alternates full sweeps with sweeps restricted to
    the current active set. Returns ``(n_sweeps, converged, objective_trace)``.
    """
    n, p = X.shape
    col_sq = np.einsum("ij,ij->j", X, X) / n
    r = y - X @ beta
    thresh = lam * weights

    def objective():
        return 0.5 * (r @ r) / n + lam * np.sum(weights * np.abs(beta))

    trace = [objective()]
    n_iter = 0
    converged = False
    full = True
    while n_iter < max_iter:
        max_change = 0.0
        for j in range(p):
            cj = col_sq[j]
            if cj == 0.0:
                continue
            if not full and beta[j] == 0.0:
                continue
            xj = X[:, j]
            bj = beta[j]
            z = xj @ r / n + cj * bj
            if z > thresh[j]:
                new = (z - thresh[j]) / cj
            elif z < -thresh[j]:
                new = (z + thresh[j]) / cj
            else:
                new = 0.0
            delta = new - bj
            if delta != 0.0:
                r -= delta * xj
                beta[j] = new
                change = abs(delta)
                if change > max_change:
                    max_change = change
        n_iter += 1
        trace.append(objective())
        if max_change < tol:
            if full:
                converged = True
                break
            full = True
        else:
            full = False
    return n_iter, converged, np.asarray(trace)
