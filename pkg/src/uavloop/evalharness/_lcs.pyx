# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tolerant-LCS kernel; semantics mirror ``matching._lcs_python``."""

from libc.math cimport fabs, fmod
from libc.stdlib cimport free, malloc


cdef inline double _yaw_gap(double a, double b, bint modulo) nogil:
    cdef double d
    if not modulo:
        return fabs(a - b)
    # Python-style modulo: result in [0, 360)
    d = fmod(a - b + 180.0, 360.0)
    if d < 0:
        d += 360.0
    return fabs(d - 180.0)


cdef int _load(object seq, double* out, Py_ssize_t n) except -1:
    cdef Py_ssize_t i
    for i in range(n):
        t = seq[i]
        out[4 * i] = t.d_north
        out[4 * i + 1] = t.d_east
        out[4 * i + 2] = t.d_down
        out[4 * i + 3] = t.d_yaw
    return 0


def lcs_length(object executed, object ground_truth, double pos_tol, double yaw_tol, bint yaw_modulo):
    cdef Py_ssize_t n = len(executed), m = len(ground_truth)
    cdef Py_ssize_t i, j
    cdef double *a
    cdef double *b
    cdef int *prev
    cdef int *cur
    cdef int *swap
    cdef int result
    if n == 0 or m == 0:
        return 0
    a = <double*>malloc(4 * n * sizeof(double))
    b = <double*>malloc(4 * m * sizeof(double))
    prev = <int*>malloc((m + 1) * sizeof(int))
    cur = <int*>malloc((m + 1) * sizeof(int))
    if a == NULL or b == NULL or prev == NULL or cur == NULL:
        free(a); free(b); free(prev); free(cur)
        raise MemoryError()
    try:
        _load(executed, a, n)
        _load(ground_truth, b, m)
        for j in range(m + 1):
            prev[j] = 0
        cur[0] = 0
        for i in range(n):
            for j in range(m):
                if (fabs(a[4 * i] - b[4 * j]) <= pos_tol
                        and fabs(a[4 * i + 1] - b[4 * j + 1]) <= pos_tol
                        and fabs(a[4 * i + 2] - b[4 * j + 2]) <= pos_tol
                        and _yaw_gap(a[4 * i + 3], b[4 * j + 3], yaw_modulo) <= yaw_tol):
                    cur[j + 1] = prev[j] + 1
                elif prev[j + 1] > cur[j]:
                    cur[j + 1] = prev[j + 1]
                else:
                    cur[j + 1] = cur[j]
            swap = prev
            prev = cur
            cur = swap
        result = prev[m]
    finally:
        free(a); free(b); free(prev); free(cur)
    return result
