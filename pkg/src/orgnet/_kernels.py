"""Compiled inner loops for the revised simplex.

The sparse LU comes from SuperLU (``Pr @ B @ Pc = L @ U``); the solves below
walk its CSC factors directly, which avoids the per-call overhead of the
SuperLU wrapper for the small, very sparse bases the simplex produces.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def lu_solve(Lp, Li, Lx, Up, Ui, Ux, Udiag, perm_r, perm_c, b):
    n = b.shape[0]
    w = np.empty(n)
    for i in range(n):
        w[perm_r[i]] = b[i]
    for j in range(n):
        xj = w[j]
        if xj != 0.0:
            for k in range(Lp[j], Lp[j + 1]):
                i = Li[k]
                if i > j:
                    w[i] -= Lx[k] * xj
    for j in range(n - 1, -1, -1):
        if w[j] != 0.0:
            xj = w[j] / Ux[Udiag[j]]
            w[j] = xj
            for k in range(Up[j], Up[j + 1]):
                i = Ui[k]
                if i < j:
                    w[i] -= Ux[k] * xj
    x = np.empty(n)
    for i in range(n):
        x[i] = w[perm_c[i]]
    return x


@njit(cache=True)
def lu_solve_t(Lp, Li, Lx, Up, Ui, Ux, Udiag, perm_r, perm_c, c):
    """Solve with the transposed factors, given L and U in CSR form.

    A CSR row of U is a CSC column of U^T, so both triangular sweeps keep
    the axpy shape and skip zero entries, which matters for unit rhs.
    """
    n = c.shape[0]
    z = np.empty(n)
    for i in range(n):
        z[perm_c[i]] = c[i]
    for j in range(n):
        if z[j] != 0.0:
            zj = z[j] / Ux[Udiag[j]]
            z[j] = zj
            for k in range(Up[j], Up[j + 1]):
                i = Ui[k]
                if i > j:
                    z[i] -= Ux[k] * zj
    for j in range(n - 1, -1, -1):
        zj = z[j]
        if zj != 0.0:
            for k in range(Lp[j], Lp[j + 1]):
                i = Li[k]
                if i < j:
                    z[i] -= Lx[k] * zj
    y = np.empty(n)
    for i in range(n):
        y[i] = z[perm_r[i]]
    return y


@njit(cache=True)
def udiag_positions(Up, Ui):
    n = Up.shape[0] - 1
    pos = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        for k in range(Up[j], Up[j + 1]):
            if Ui[k] == j:
                pos[j] = k
    return pos


@njit(cache=True)
def eta_forward(x, count, rows, piv, start, idx, vals):
    for e in range(count):
        r = rows[e]
        xr = x[r] / piv[e]
        if xr != 0.0:
            for k in range(start[e], start[e + 1]):
                x[idx[k]] -= vals[k] * xr
        x[r] = xr


@njit(cache=True)
def eta_backward(z, count, rows, piv, start, idx, vals):
    for e in range(count - 1, -1, -1):
        r = rows[e]
        s = z[r]
        for k in range(start[e], start[e + 1]):
            s -= vals[k] * z[idx[k]]
        z[r] = s / piv[e]


@njit(cache=True)
def eta_append(alpha, r, e, rows, piv, start, idx, vals, drop):
    """Store column ``alpha`` (pivot row r) as eta e; False if the buffers are full.

    Entries below ``drop`` in magnitude are cancellation noise and are skipped.
    """
    k = start[e]
    cap = idx.shape[0]
    for i in range(alpha.shape[0]):
        if i != r and abs(alpha[i]) > drop:
            if k >= cap:
                return False
            idx[k] = i
            vals[k] = alpha[i]
            k += 1
    rows[e] = r
    piv[e] = alpha[r]
    start[e + 1] = k
    return True


@njit(cache=True)
def harris_ratio(alpha, direction, xB, ub, pivot_tol, primal_tol):
    """Two-pass Harris ratio test; returns (row, step) or (-1, inf)."""
    m = alpha.shape[0]
    bound = np.inf
    for i in range(m):
        delta = -direction * alpha[i]
        if delta < -pivot_tol:
            t = (max(xB[i], 0.0) + primal_tol) / -delta
        elif delta > pivot_tol and ub[i] < np.inf:
            t = (max(ub[i] - xB[i], 0.0) + primal_tol) / delta
        else:
            continue
        if t < bound:
            bound = t
    if bound == np.inf:
        return -1, np.inf
    best = -1
    best_abs = 0.0
    best_ratio = np.inf
    for i in range(m):
        delta = -direction * alpha[i]
        if delta < -pivot_tol:
            t = max(xB[i], 0.0) / -delta
        elif delta > pivot_tol and ub[i] < np.inf:
            t = max(ub[i] - xB[i], 0.0) / delta
        else:
            continue
        if t <= bound and abs(alpha[i]) > best_abs:
            best = i
            best_abs = abs(alpha[i])
            best_ratio = t
    return best, best_ratio


@njit(cache=True)
def price(d, at_upper, blocked, weights, use_weights, dual_tol):
    """Entering column by (devex-weighted) dual infeasibility, or -1."""
    best = -1
    best_score = 0.0
    for j in range(d.shape[0]):
        if blocked[j]:
            continue
        s = d[j] if at_upper[j] else -d[j]
        if s > dual_tol:
            if use_weights:
                s = s * s / weights[j]
            if s > best_score:
                best_score = s
                best = j
    return best


@njit(cache=True)
def devex_update(weights, row, alpha_r, w_q):
    top = 0.0
    for j in range(row.shape[0]):
        rj = row[j]
        if rj != 0.0:
            ratio = rj / alpha_r
            cand = ratio * ratio * w_q
            if cand > weights[j]:
                weights[j] = cand
        if weights[j] > top:
            top = weights[j]
    return top
