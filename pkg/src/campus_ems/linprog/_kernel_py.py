"""Pure numpy implementation of the dense bounded-variable simplex loops.

Mirrors ``_kernel.pyx`` exactly and is used when the compiled extension is
unavailable or ``CAMPUS_EMS_PURE_PYTHON`` is set. All arrays are modified
in place. The problem is always a minimisation over ``T = B^-1 A`` with
reduced costs ``d``.
"""
import numpy as np

BASIC, AT_LB, AT_UB, FREE = 0, 1, 2, 3
OPTIMAL, UNBOUNDED, INFEASIBLE, ITER_LIMIT = 0, 1, 2, 3
BLAND, DANTZIG = 0, 1

STALL_LIMIT = 50
TIE = 1e-12


def pivot(T, d, r, q):
    row = T[r] / T[r, q]
    T[r] = row
    col = T[:, q].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        T[nz] -= np.outer(col[nz], row)
        T[nz, q] = 0.0
    T[r, q] = 1.0
    dq = d[q]
    if dq != 0.0:
        d -= dq * row
    d[q] = 0.0


def primal_simplex(T, d, x, lb, ub, basis, status, rule, max_iter, tol_opt, tol_piv):
    m, n = T.shape
    use_bland = rule == BLAND
    degenerate = 0
    movable = lb < ub
    for it in range(max_iter):
        nonbasic = (status != BASIC) & movable
        up = nonbasic & ((status == AT_LB) | (status == FREE)) & (d < -tol_opt)
        down = nonbasic & ((status == AT_UB) | (status == FREE)) & (d > tol_opt)
        cand = up | down
        if not cand.any():
            return OPTIMAL, it
        if use_bland:
            q = int(np.argmax(cand))
        else:
            q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
        direction = 1.0 if up[q] else -1.0

        a = direction * T[:, q]
        xb = x[basis]
        lbb, ubb = lb[basis], ub[basis]
        lim = np.full(m, np.inf)
        dec = (a > tol_piv) & np.isfinite(lbb)
        inc = (a < -tol_piv) & np.isfinite(ubb)
        lim[dec] = (xb[dec] - lbb[dec]) / a[dec]
        lim[inc] = (ubb[inc] - xb[inc]) / (-a[inc])
        np.maximum(lim, 0.0, out=lim)
        theta = ub[q] - lb[q]
        r = -1
        if m:
            lo = lim.min()
            if lo < theta - TIE or (np.isinf(theta) and np.isfinite(lo)):
                ties = np.flatnonzero(lim <= lo + TIE)
                if use_bland:
                    r = int(ties[np.argmin(basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(a[ties]))])
                theta = lim[r]
        if np.isinf(theta):
            return UNBOUNDED, it

        if theta > 0.0:
            x[q] += direction * theta
            x[basis] -= direction * theta * T[:, q]
        if theta <= TIE:
            degenerate += 1
            if degenerate > STALL_LIMIT:
                use_bland = True
        else:
            degenerate = 0

        if r < 0:
            if direction > 0:
                status[q] = AT_UB
                x[q] = ub[q]
            else:
                status[q] = AT_LB
                x[q] = lb[q]
            continue
        leaving = basis[r]
        if a[r] > 0:
            status[leaving] = AT_LB
            x[leaving] = lb[leaving]
        else:
            status[leaving] = AT_UB
            x[leaving] = ub[leaving]
        pivot(T, d, r, q)
        basis[r] = q
        status[q] = BASIC
    return ITER_LIMIT, max_iter


def dual_simplex(T, d, x, lb, ub, basis, status, max_iter, tol_feas, tol_piv):
    m, n = T.shape
    use_bland = False
    degenerate = 0
    movable = lb < ub
    for it in range(max_iter):
        xb = x[basis]
        below = lb[basis] - xb
        above = xb - ub[basis]
        infeas = np.maximum(below, above)
        bad = infeas > tol_feas
        if not bad.any():
            return OPTIMAL, it
        if use_bland:
            rows = np.flatnonzero(bad)
            r = int(rows[np.argmin(basis[rows])])
        else:
            r = int(np.argmax(infeas))
        leaving = basis[r]
        increasing = below[r] > 0
        s = 1.0 if increasing else -1.0
        target = lb[leaving] if increasing else ub[leaving]

        row = T[r]
        nonbasic = (status != BASIC) & movable
        # x_leaving moves by -dir * row[j] * t; need -dir * row[j] * s > 0
        can_up = nonbasic & ((status == AT_LB) | (status == FREE)) & (-row * s > tol_piv)
        can_down = nonbasic & ((status == AT_UB) | (status == FREE)) & (row * s > tol_piv)
        cand = can_up | can_down
        if not cand.any():
            return INFEASIBLE, it
        idx = np.flatnonzero(cand)
        ratio = np.abs(d[idx]) / np.abs(row[idx])
        lo = ratio.min()
        ties = idx[ratio <= lo + TIE]
        if use_bland:
            q = int(ties.min())
        else:
            q = int(ties[np.argmax(np.abs(row[ties]))])
        direction = 1.0 if can_up[q] else -1.0

        t = (target - x[leaving]) / (-direction * row[q])
        x[q] += direction * t
        x[basis] -= direction * t * T[:, q]
        x[leaving] = target
        status[leaving] = AT_LB if increasing else AT_UB
        if lo <= TIE:
            degenerate += 1
            if degenerate > STALL_LIMIT:
                use_bland = True
        else:
            degenerate = 0
        pivot(T, d, r, q)
        basis[r] = q
        status[q] = BASIC
    return ITER_LIMIT, max_iter
