# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the entrywise template subproblem.

Mirrors ``tgraph.kernels.pure`` operation for operation; built with
-ffp-contract=off so results are bit-identical to the pure backend.
"""

import numpy as np

from libc.math cimport fabs

BACKEND_NAME = "compiled"

MAX_HINGES = 8

cdef double _TIE_REL = 1e-12
cdef int _MAX_H = 8


cdef inline double _penalized_value(
    double a_sum, double s_val, double* bs, double* gammas, int n_h,
    double lambda1, double lambda2, bint separation, double x,
) noexcept nogil:
    cdef double g = a_sum * x * x - 2.0 * s_val * x + lambda1 * fabs(x)
    cdef double d, t
    cdef int j
    for j in range(n_h):
        d = fabs(x - bs[j])
        if separation:
            t = gammas[j] - d
        else:
            t = d - gammas[j]
        if t > 0.0:
            g += lambda2 * t
    return g


cdef double _solve_one(
    double a_sum, double s_val, double* bs, double* gammas, int n_h,
    double lambda1, double lambda2, bint separation,
) noexcept nogil:
    cdef double best_x = 0.0
    cdef double best_g = _penalized_value(
        a_sum, s_val, bs, gammas, n_h, lambda1, lambda2, separation, 0.0
    )
    cdef double x, g, tol, sigma, sign0, ax, abx
    cdef long combo, rest, n_combo
    cdef int j, k, phase

    # Kinks of the piecewise-linear part (x = 0 was candidate zero above).
    for j in range(n_h):
        for phase in range(3):
            if phase == 0:
                x = bs[j] - gammas[j]
            elif phase == 1:
                x = bs[j] + gammas[j]
            elif separation:
                x = bs[j]
            else:
                continue
            g = _penalized_value(
                a_sum, s_val, bs, gammas, n_h, lambda1, lambda2, separation, x
            )
            tol = _TIE_REL * (1.0 + fabs(best_g))
            if g < best_g - tol:
                best_x = x
                best_g = g
            elif fabs(g - best_g) <= tol:
                ax = fabs(x)
                abx = fabs(best_x)
                if ax < abx or (ax == abx and x < best_x):
                    best_x = x
                    best_g = g

    # Stationary points of every quadratic piece, one per slope combination.
    n_combo = 1
    for j in range(n_h):
        n_combo *= 3
    for k in range(2):
        sign0 = -1.0 if k == 0 else 1.0
        for combo in range(n_combo):
            sigma = sign0 * lambda1
            rest = combo
            for j in range(n_h):
                sigma += (<double> (rest % 3 - 1)) * lambda2
                rest //= 3
            x = (2.0 * s_val - sigma) / (2.0 * a_sum)
            g = _penalized_value(
                a_sum, s_val, bs, gammas, n_h, lambda1, lambda2, separation, x
            )
            tol = _TIE_REL * (1.0 + fabs(best_g))
            if g < best_g - tol:
                best_x = x
                best_g = g
            elif fabs(g - best_g) <= tol:
                ax = fabs(x)
                abx = fabs(best_x)
                if ax < abx or (ax == abx and x < best_x):
                    best_x = x
                    best_g = g
    return best_x


def solve_piecewise(a_sum, s_val, bs, gammas, lambda1, lambda2, separation):
    """Scalar entry solve; same contract as the pure backend."""
    if a_sum <= 0.0:
        raise ValueError(f"quadratic coefficient must be positive, got {a_sum}")
    cdef int n_h = len(bs)
    if n_h > _MAX_H:
        raise ValueError(f"at most {_MAX_H} hinge terms supported, got {n_h}")
    cdef double b_arr[8]
    cdef double g_arr[8]
    cdef int j
    for j in range(n_h):
        b_arr[j] = bs[j]
        g_arr[j] = gammas[j]
    return _solve_one(
        a_sum, s_val, b_arr, g_arr, n_h,
        lambda1, lambda2, bool(separation),
    )


def solve_entries(a_sum, s, b, lambda1, lambda2, gamma, separation):
    """Batched entry solves; same contract as the pure backend."""
    s_arr = np.ascontiguousarray(s, dtype=np.float64)
    b_arr = np.ascontiguousarray(b, dtype=np.float64)
    if a_sum <= 0.0:
        raise ValueError(f"quadratic coefficient must be positive, got {a_sum}")
    cdef Py_ssize_t n_entries = s_arr.shape[0]
    cdef Py_ssize_t n_h = b_arr.shape[0]
    if n_h > _MAX_H:
        raise ValueError(f"at most {_MAX_H} hinge terms supported, got {n_h}")
    out = np.empty(n_entries, dtype=np.float64)
    cdef double[::1] s_v = s_arr
    cdef double[:, ::1] b_v = b_arr.reshape(n_h, n_entries) if n_h else b_arr.reshape(0, n_entries)
    cdef double[::1] out_v = out
    cdef double a = a_sum
    cdef double l1 = lambda1
    cdef double l2 = lambda2
    cdef double gam = gamma
    cdef bint sep = bool(separation)
    cdef double bcol[8]
    cdef double gcol[8]
    cdef Py_ssize_t p
    cdef int j
    for j in range(n_h):
        gcol[j] = gam
    with nogil:
        for p in range(n_entries):
            for j in range(n_h):
                bcol[j] = b_v[j, p]
            out_v[p] = _solve_one(a, s_v[p], bcol, gcol, n_h, l1, l2, sep)
    return out
