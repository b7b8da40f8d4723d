# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step Runge-Kutta stepping loop.

Same contract as graphon_sir._stepper_py.run; the mat-vec products go through
BLAS dgemv and everything else is plain C loops.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()

BACKEND = "compiled"


cdef inline int _segment(const double[::1] times, double t) noexcept nogil:
    cdef int idx
    for idx in range(times.shape[0] - 1, -1, -1):
        if times[idx] <= t:
            return idx
    return 0


def run(
    const double[:, ::1] rk_a,
    const double[::1] rk_b,
    const double[::1] rk_c,
    const double[::1] a_times,
    const double[:, :, ::1] a_stack,
    const double[::1] b_times,
    const double[:, ::1] b_stack,
    const double[::1] g_times,
    const double[:, ::1] g_stack,
    double[::1] y0,
    double dt,
    long n_steps,
    double last_h,
    const long[::1] store_steps,
    bint self_interaction,
    double[:, ::1] out_states,
    double[::1] stats,
):
    """Advance y0 for n_steps; fill out_states rows 1.. at store_steps.

    Returns -1 on success, or the 1-based index of the first step that
    produced a nonfinite state.  stats accumulates, in order: max |s+i+r-1|,
    max (y-1), max (-y), max per-step s increase, max per-step r decrease.
    """
    cdef int stages = rk_b.shape[0]
    cdef int n = b_stack.shape[1]
    cdef int n3 = 3 * n
    cdef double n_d = <double> n

    y_arr = np.array(y0, dtype=np.float64, copy=True)
    k_arr = np.empty((stages, n3), dtype=np.float64)
    ynew_arr = np.empty(n3, dtype=np.float64)
    ys_arr = np.empty(n3, dtype=np.float64)
    tmp_arr = np.empty(n3, dtype=np.float64)
    bi_arr = np.empty(n, dtype=np.float64)
    m_arr = np.empty(n, dtype=np.float64)

    cdef double[::1] y = y_arr
    cdef double[:, ::1] k_rows = k_arr
    cdef double[::1] y_new = ynew_arr
    cdef double[::1] ys = ys_arr
    cdef double[::1] tmp = tmp_arr
    cdef double[::1] bi = bi_arr
    cdef double[::1] m = m_arr

    cdef long k
    cdef int i, j, ia, ib, ig, ione = 1, ncols
    cdef double h, t, t_stage, infection, recovery, val, dev
    cdef double one = 1.0, zero = 0.0
    cdef long ptr = 0
    cdef long bad = -1

    with nogil:
        for k in range(n_steps):
            h = dt if k < n_steps - 1 else last_h
            t = k * dt
            for i in range(stages):
                if i == 0:
                    for j in range(n3):
                        ys[j] = y[j]
                else:
                    # tmp = (first i rows of k_rows)^T @ rk_a[i, :i]; the
                    # C-order (stages, 3n) block reads as Fortran (3n, stages)
                    ncols = i
                    dgemv("N", &n3, &ncols, &one, &k_rows[0, 0], &n3,
                          <double*> &rk_a[i, 0], &ione, &zero, &tmp[0], &ione)
                    for j in range(n3):
                        ys[j] = y[j] + h * tmp[j]
                t_stage = t + rk_c[i] * h
                ia = _segment(a_times, t_stage)
                ib = _segment(b_times, t_stage)
                ig = _segment(g_times, t_stage)
                for j in range(n):
                    bi[j] = b_stack[ib, j] * ys[n + j]
                # m = A @ bi with A in C order: Fortran-transposed dgemv
                dgemv("T", &n, &n, &one, <double*> &a_stack[ia, 0, 0], &n,
                      &bi[0], &ione, &zero, &m[0], &ione)
                for j in range(n):
                    infection = ys[j] * m[j] / n_d
                    if self_interaction:
                        infection = infection + (b_stack[ib, j] * ys[j]) * ys[n + j]
                    recovery = g_stack[ig, j] * ys[n + j]
                    k_rows[i, j] = -infection
                    k_rows[i, n + j] = infection - recovery
                    k_rows[i, 2 * n + j] = recovery
            ncols = stages
            dgemv("N", &n3, &ncols, &one, &k_rows[0, 0], &n3,
                  <double*> &rk_b[0], &ione, &zero, &tmp[0], &ione)
            for j in range(n3):
                y_new[j] = y[j] + h * tmp[j]

            for j in range(n3):
                if not isfinite(y_new[j]):
                    bad = k + 1
                    break
            if bad >= 0:
                break
            for j in range(n):
                dev = y_new[j] + y_new[n + j] + y_new[2 * n + j] - 1.0
                if dev < 0:
                    dev = -dev
                if dev > stats[0]:
                    stats[0] = dev
            for j in range(n3):
                val = y_new[j] - 1.0
                if val > stats[1]:
                    stats[1] = val
                val = -y_new[j]
                if val > stats[2]:
                    stats[2] = val
            for j in range(n):
                val = y_new[j] - y[j]
                if val > stats[3]:
                    stats[3] = val
                val = y[2 * n + j] - y_new[2 * n + j]
                if val > stats[4]:
                    stats[4] = val
            for j in range(n3):
                y[j] = y_new[j]

            if ptr < store_steps.shape[0] and store_steps[ptr] == k + 1:
                for j in range(n3):
                    out_states[ptr + 1, j] = y[j]
                ptr += 1
    return bad
