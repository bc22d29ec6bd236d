# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: fused row-wise reductions and stream dropout.

Must stay semantically aligned with ``_numpy.py``; the dropout stream is
bit-identical by construction, float reductions agree to a few ulp.
"""

from libc.math cimport erf, exp, log, sqrt

import numpy as np

BACKEND = "cython"

FNV_OFFSET = 0xCBF29CE484222325

cdef double SQRT1_2 = 1.0 / sqrt(2.0)
cdef double TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53
cdef unsigned long long GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline unsigned long long mix64(unsigned long long z) noexcept nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9ULL
    z ^= z >> 27
    z *= 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double stream_value(unsigned long long seed, unsigned long long index) noexcept nogil:
    # value at 0-based global index: finalize(seed + (index+1)*GAMMA)
    return <double>(mix64(seed + (index + 1) * GAMMA) >> 11) * TO_UNIT


def layer_norm2d(const double[:, ::1] x, const double[::1] gain, const double[::1] bias, double eps):
    cdef Py_ssize_t rows = x.shape[0], d = x.shape[1]
    out_arr = np.empty((rows, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double mean, var, diff, inv_std
    with nogil:
        for i in range(rows):
            mean = 0.0
            for j in range(d):
                mean += x[i, j]
            mean /= d
            var = 0.0
            for j in range(d):
                diff = x[i, j] - mean
                var += diff * diff
            var /= d
            inv_std = 1.0 / sqrt(var + eps)
            for j in range(d):
                out[i, j] = (x[i, j] - mean) * inv_std * gain[j] + bias[j]
    return out_arr


def gelu1d(const double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = 0.5 * x[i] * (1.0 + erf(x[i] * SQRT1_2))
    return out_arr


def softmax2d(const double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], n = x.shape[1]
    out_arr = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double m, s
    with nogil:
        for i in range(rows):
            m = x[i, 0]
            for j in range(1, n):
                if x[i, j] > m:
                    m = x[i, j]
            s = 0.0
            for j in range(n):
                out[i, j] = exp(x[i, j] - m)
                s += out[i, j]
            s = 1.0 / s
            for j in range(n):
                out[i, j] *= s
    return out_arr


def log_softmax2d(const double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], n = x.shape[1]
    out_arr = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double m, s, lse
    with nogil:
        for i in range(rows):
            m = x[i, 0]
            for j in range(1, n):
                if x[i, j] > m:
                    m = x[i, j]
            s = 0.0
            for j in range(n):
                s += exp(x[i, j] - m)
            lse = log(s)
            for j in range(n):
                out[i, j] = x[i, j] - m - lse
    return out_arr


def uniforms1d(seed, start, n):
    cdef unsigned long long s = <unsigned long long>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long base = <unsigned long long>(int(start) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t count = n
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(count):
            out[i] = stream_value(s, base + <unsigned long long>i)
    return out_arr


def keep_scale1d(double rate, seed, start, n):
    cdef unsigned long long s = <unsigned long long>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long base = <unsigned long long>(int(start) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t count = n
    cdef double scale = 1.0 / (1.0 - rate)
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(count):
            out[i] = scale if stream_value(s, base + <unsigned long long>i) >= rate else 0.0
    return out_arr


def dropout1d(const double[::1] x, double rate, seed, start):
    cdef unsigned long long s = <unsigned long long>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long base = <unsigned long long>(int(start) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t n = x.shape[0]
    cdef double scale = 1.0 / (1.0 - rate)
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = x[i] * scale if stream_value(s, base + <unsigned long long>i) >= rate else 0.0
    return out_arr


def fnv1a64(data, h=FNV_OFFSET):
    cdef const unsigned char[::1] buf = bytes(data) if not isinstance(data, (bytes, bytearray, memoryview)) else data
    cdef unsigned long long acc = <unsigned long long>(int(h) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t i, n = buf.shape[0]
    with nogil:
        for i in range(n):
            acc = (acc ^ <unsigned long long>buf[i]) * 0x100000001B3ULL
    return acc
