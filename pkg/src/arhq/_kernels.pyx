# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fake-quantization kernels (single pass per group).

Bit-for-bit twin of ``arhq._kernels_np``: every arithmetic expression keeps
the same evaluation order, including the division-then-multiplication in the
dequantization step (a reciprocal-multiply would change the rounding).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor

cnp.import_array()

cdef double[8] _GRID
cdef double[8] _NORM
cdef double[7] _MIDS

_GRID[0] = 0.0
_GRID[1] = 0.5
_GRID[2] = 1.0
_GRID[3] = 1.5
_GRID[4] = 2.0
_GRID[5] = 3.0
_GRID[6] = 4.0
_GRID[7] = 6.0

cdef int _k
for _k in range(8):
    _NORM[_k] = _GRID[_k] / 6.0
for _k in range(7):
    _MIDS[_k] = (_GRID[_k] + _GRID[_k + 1]) / 2.0


cdef inline double _scale(double m, double clip) nogil:
    if clip > 0 and clip < m:
        m = clip
    if m == 0:
        return 1.0
    return m


cdef inline double _uq(double v, double s, double qmax) nogil:
    cdef double q = v / s * qmax
    cdef double r = floor(fabs(q) + 0.5)
    if r > qmax:
        r = qmax
    if q < 0:
        r = -r
    return r / qmax * s


def quant_uniform(const double[:, ::1] x, int bits, int mode, Py_ssize_t block, double clip):
    """Symmetric uniform fake-quantization onto 2**bits - 1 levels."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((n, d))
    cdef double[:, ::1] out = out_arr
    cdef double qmax = <double> ((1 << (bits - 1)) - 1)
    cdef Py_ssize_t i, j, b0, b1
    cdef double m, s
    cdef cnp.ndarray[cnp.float64_t, ndim=1] col_arr = np.zeros(d)
    cdef double[::1] col = col_arr

    with nogil:
        if mode == 0:
            m = 0.0
            for i in range(n):
                for j in range(d):
                    if fabs(x[i, j]) > m:
                        m = fabs(x[i, j])
            s = _scale(m, clip)
            for i in range(n):
                for j in range(d):
                    out[i, j] = _uq(x[i, j], s, qmax)
        elif mode == 1:
            for i in range(n):
                m = 0.0
                for j in range(d):
                    if fabs(x[i, j]) > m:
                        m = fabs(x[i, j])
                s = _scale(m, clip)
                for j in range(d):
                    out[i, j] = _uq(x[i, j], s, qmax)
        elif mode == 2:
            # two row-major passes keep the column-wise reduction cache friendly
            for i in range(n):
                for j in range(d):
                    if fabs(x[i, j]) > col[j]:
                        col[j] = fabs(x[i, j])
            for j in range(d):
                col[j] = _scale(col[j], clip)
            for i in range(n):
                for j in range(d):
                    out[i, j] = _uq(x[i, j], col[j], qmax)
        else:
            for i in range(n):
                b0 = 0
                while b0 < d:
                    b1 = b0 + block
                    if b1 > d:
                        b1 = d
                    m = 0.0
                    for j in range(b0, b1):
                        if fabs(x[i, j]) > m:
                            m = fabs(x[i, j])
                    s = _scale(m, clip)
                    for j in range(b0, b1):
                        out[i, j] = _uq(x[i, j], s, qmax)
                    b0 = b1
    return out_arr


def quant_fp4(const double[:, ::1] x, Py_ssize_t block):
    """Block-wise FP4 (E2M1 magnitude grid) fake-quantization."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((n, d))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, b0, b1
    cdef int k
    cdef double m, s, w, y

    with nogil:
        for i in range(n):
            b0 = 0
            while b0 < d:
                b1 = b0 + block
                if b1 > d:
                    b1 = d
                m = 0.0
                for j in range(b0, b1):
                    if fabs(x[i, j]) > m:
                        m = fabs(x[i, j])
                s = 1.0 if m == 0 else m
                for j in range(b0, b1):
                    w = fabs(x[i, j]) * 6.0 / s
                    k = 0
                    while k < 7 and w >= _MIDS[k]:
                        k += 1
                    y = _NORM[k] * s
                    out[i, j] = -y if x[i, j] < 0 else y
                b0 = b1
    return out_arr
