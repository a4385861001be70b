# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-loop kernel; mirrors recloop._fallback.run_users exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def run_users(double[::1] x0, double[:, ::1] draws, double alpha, double beta,
              double gamma, long period, long horizon, bint history=False,
              bint record=False):
    cdef Py_ssize_t m = x0.shape[0]
    cdef Py_ssize_t i, k, j
    cdef double x, b, u, inc, best, d
    cdef bint explore

    x_final_arr = np.empty(m, dtype=np.float64)
    inc_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] x_final = x_final_arr
    cdef double[::1] incumbent = inc_arr
    cdef double[:, ::1] paths
    cdef double[:, ::1] served
    paths_arr = served_arr = None
    if record:
        paths_arr = np.empty((m, horizon + 1), dtype=np.float64)
        served_arr = np.empty((m, horizon), dtype=np.float64)
        paths = paths_arr
        served = served_arr

    with nogil:
        for i in range(m):
            b = x0[i]
            x = b
            inc = 0.0
            best = 0.0
            j = 0
            if record:
                paths[i, 0] = x
            for k in range(horizon):
                if period > 0:
                    explore = (k % period) == 0
                else:
                    explore = k == 0
                if explore:
                    u = draws[i, j]
                    j += 1
                    d = fabs(x - u)
                    if k == 0:
                        inc = u
                        best = d
                    elif history:
                        if d < best:
                            inc = u
                            best = d
                    elif d < fabs(x - inc):
                        inc = u
                else:
                    u = inc
                    if history:
                        d = fabs(x - u)
                        if d < best:
                            best = d
                x = alpha * b + beta * x + gamma * u
                if record:
                    served[i, k] = u
                    paths[i, k + 1] = x
            x_final[i] = x
            incumbent[i] = inc
    return x_final_arr, inc_arr, paths_arr, served_arr
