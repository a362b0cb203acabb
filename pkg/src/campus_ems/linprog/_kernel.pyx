# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense bounded-variable simplex loops.

Same contract as ``_kernel_py``: in-place updates of the tableau ``T``,
reduced costs ``d``, values ``x`` and basis bookkeeping, minimisation form.
"""
from libc.math cimport fabs, INFINITY, isfinite

cdef enum:
    BASIC = 0
    AT_LB = 1
    AT_UB = 2
    FREE = 3

cdef enum:
    C_OPTIMAL = 0
    C_UNBOUNDED = 1
    C_INFEASIBLE = 2
    C_ITER_LIMIT = 3

OPTIMAL, UNBOUNDED, INFEASIBLE, ITER_LIMIT = 0, 1, 2, 3
BLAND, DANTZIG = 0, 1

cdef int STALL_LIMIT = 50
cdef double TIE = 1e-12


cdef void _pivot(double[:, ::1] T, double[::1] d, Py_ssize_t r, Py_ssize_t q) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1], i, k
    cdef double piv = T[r, q], f
    for k in range(n):
        T[r, k] /= piv
    for i in range(m):
        if i == r:
            continue
        f = T[i, q]
        if f != 0.0:
            for k in range(n):
                T[i, k] -= f * T[r, k]
            T[i, q] = 0.0
    T[r, q] = 1.0
    f = d[q]
    if f != 0.0:
        for k in range(n):
            d[k] -= f * T[r, k]
    d[q] = 0.0


def pivot(double[:, ::1] T, double[::1] d, Py_ssize_t r, Py_ssize_t q):
    _pivot(T, d, r, q)


def primal_simplex(double[:, ::1] T, double[::1] d, double[::1] x, double[::1] lb,
                   double[::1] ub, long[::1] basis, signed char[::1] status, int rule,
                   long max_iter, double tol_opt, double tol_piv):
    cdef long iters = 0
    cdef int code
    with nogil:
        code = _primal(T, d, x, lb, ub, basis, status, rule, max_iter, tol_opt, tol_piv, &iters)
    return code, iters


cdef int _primal(double[:, ::1] T, double[::1] d, double[::1] x, double[::1] lb,
                 double[::1] ub, long[::1] basis, signed char[::1] status, int rule,
                 long max_iter, double tol_opt, double tol_piv, long* iters) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1]
    cdef Py_ssize_t i, j, q, r, bi, leaving
    cdef long it
    cdef bint use_bland = rule == 0
    cdef int degenerate = 0
    cdef double best, dj, direction, theta, a, lim, best_a, xb
    cdef signed char st
    for it in range(max_iter):
        q = -1
        best = 0.0
        direction = 0.0
        for j in range(n):
            st = status[j]
            if st == BASIC or lb[j] == ub[j]:
                continue
            dj = d[j]
            if (st == AT_LB or st == FREE) and dj < -tol_opt:
                if use_bland:
                    q = j
                    direction = 1.0
                    break
                if -dj > best:
                    best = -dj
                    q = j
                    direction = 1.0
            elif (st == AT_UB or st == FREE) and dj > tol_opt:
                if use_bland:
                    q = j
                    direction = -1.0
                    break
                if dj > best:
                    best = dj
                    q = j
                    direction = -1.0
        if q < 0:
            iters[0] = it
            return C_OPTIMAL

        theta = ub[q] - lb[q]
        r = -1
        best_a = 0.0
        for i in range(m):
            a = direction * T[i, q]
            bi = basis[i]
            if a > tol_piv:
                if not isfinite(lb[bi]):
                    continue
                lim = (x[bi] - lb[bi]) / a
            elif a < -tol_piv:
                if not isfinite(ub[bi]):
                    continue
                lim = (ub[bi] - x[bi]) / (-a)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if r < 0:
                if lim < theta - TIE or (not isfinite(theta)):
                    r = i
                    theta = lim
                    best_a = fabs(a)
            elif lim < theta - TIE:
                r = i
                theta = lim
                best_a = fabs(a)
            elif lim <= theta + TIE:
                if use_bland:
                    if basis[i] < basis[r]:
                        r = i
                        best_a = fabs(a)
                elif fabs(a) > best_a:
                    r = i
                    best_a = fabs(a)
        if not isfinite(theta):
            iters[0] = it
            return C_UNBOUNDED
        # ties above may have lowered theta by at most TIE; use the chosen row's limit
        if r >= 0:
            a = direction * T[r, q]
            bi = basis[r]
            if a > 0:
                theta = (x[bi] - lb[bi]) / a
            else:
                theta = (ub[bi] - x[bi]) / (-a)
            if theta < 0.0:
                theta = 0.0

        if theta > 0.0:
            x[q] += direction * theta
            for i in range(m):
                x[basis[i]] -= direction * theta * T[i, q]
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
        if direction * T[r, q] > 0:
            status[leaving] = AT_LB
            x[leaving] = lb[leaving]
        else:
            status[leaving] = AT_UB
            x[leaving] = ub[leaving]
        _pivot(T, d, r, q)
        basis[r] = q
        status[q] = BASIC
    iters[0] = max_iter
    return C_ITER_LIMIT


def dual_simplex(double[:, ::1] T, double[::1] d, double[::1] x, double[::1] lb,
                 double[::1] ub, long[::1] basis, signed char[::1] status, long max_iter,
                 double tol_feas, double tol_piv):
    cdef long iters = 0
    cdef int code
    with nogil:
        code = _dual(T, d, x, lb, ub, basis, status, max_iter, tol_feas, tol_piv, &iters)
    return code, iters


cdef int _dual(double[:, ::1] T, double[::1] d, double[::1] x, double[::1] lb,
               double[::1] ub, long[::1] basis, signed char[::1] status, long max_iter,
               double tol_feas, double tol_piv, long* iters) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1]
    cdef Py_ssize_t i, j, q, r, bi, leaving
    cdef long it
    cdef bint use_bland = False, increasing, ok_up, ok_down
    cdef int degenerate = 0
    cdef double best, v, inf_, s, target, a, ratio, lo, best_a, direction, t
    cdef signed char st
    for it in range(max_iter):
        r = -1
        best = tol_feas
        for i in range(m):
            bi = basis[i]
            v = x[bi]
            if v < lb[bi] - tol_feas:
                inf_ = lb[bi] - v
            elif v > ub[bi] + tol_feas:
                inf_ = v - ub[bi]
            else:
                continue
            if use_bland:
                if r < 0 or bi < basis[r]:
                    r = i
            elif inf_ > best:
                best = inf_
                r = i
        if r < 0:
            iters[0] = it
            return C_OPTIMAL
        leaving = basis[r]
        increasing = x[leaving] < lb[leaving]
        s = 1.0 if increasing else -1.0
        target = lb[leaving] if increasing else ub[leaving]

        q = -1
        lo = INFINITY
        best_a = 0.0
        direction = 0.0
        for j in range(n):
            st = status[j]
            if st == BASIC or lb[j] == ub[j]:
                continue
            a = T[r, j]
            ok_up = (st == AT_LB or st == FREE) and (-a * s > tol_piv)
            ok_down = (st == AT_UB or st == FREE) and (a * s > tol_piv)
            if not (ok_up or ok_down):
                continue
            ratio = fabs(d[j]) / fabs(a)
            if q < 0 or ratio < lo - TIE:
                q = j
                lo = ratio
                best_a = fabs(a)
                direction = 1.0 if ok_up else -1.0
            elif ratio <= lo + TIE:
                if use_bland:
                    continue
                if fabs(a) > best_a:
                    q = j
                    best_a = fabs(a)
                    direction = 1.0 if ok_up else -1.0
                if ratio < lo:
                    lo = ratio
        if q < 0:
            iters[0] = it
            return C_INFEASIBLE

        a = T[r, q]
        t = (target - x[leaving]) / (-direction * a)
        x[q] += direction * t
        for i in range(m):
            x[basis[i]] -= direction * t * T[i, q]
        x[leaving] = target
        status[leaving] = AT_LB if increasing else AT_UB
        if lo <= TIE:
            degenerate += 1
            if degenerate > STALL_LIMIT:
                use_bland = True
        else:
            degenerate = 0
        _pivot(T, d, r, q)
        basis[r] = q
        status[q] = BASIC
    iters[0] = max_iter
    return C_ITER_LIMIT
