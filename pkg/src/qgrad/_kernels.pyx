# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay bit-compatible with ``_fallback``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t

cnp.import_array()


cdef inline double _unit(uint64_t x) nogil:
    cdef uint64_t z = x + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    z = z ^ (z >> 31)
    return <double>(z >> 11) * (1.0 / 9007199254740992.0)


def phase_noise(uint64_t key, Py_ssize_t steps, Py_ssize_t factors,
                Py_ssize_t npoints, double half_width):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(npoints, dtype=np.float64)
    cdef double[::1] acc = out
    cdef Py_ssize_t s, f, p
    cdef uint64_t base
    cdef double u
    with nogil:
        for s in range(steps):
            for f in range(factors):
                base = key + <uint64_t>((s * factors + f) * npoints)
                for p in range(npoints):
                    u = _unit(base + <uint64_t>p)
                    acc[p] += (2.0 * u - 1.0) * half_width
    return out


def compensated_sum(double[::1] values):
    cdef double total = 0.0
    cdef double comp = 0.0
    cdef double t, v
    cdef Py_ssize_t i
    with nogil:
        for i in range(values.shape[0]):
            v = values[i]
            t = total + v
            if (total if total >= 0 else -total) >= (v if v >= 0 else -v):
                comp += (total - t) + v
            else:
                comp += (v - t) + total
            total = t
    return total + comp
