# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must match ``papertex._kernels_py`` exactly."""

import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport abs as c_abs


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def cross_counts(const uint64_t[:, ::1] bits_a, const uint64_t[:, ::1] mask_a,
                 const uint64_t[:, ::1] bits_b, const uint64_t[:, ::1] mask_b):
    cdef Py_ssize_t na = bits_a.shape[0], nb = bits_b.shape[0], nw = bits_a.shape[1]
    if bits_b.shape[1] != nw or mask_a.shape[1] != nw or mask_b.shape[1] != nw:
        raise ValueError("word counts differ")
    if mask_a.shape[0] != na or mask_b.shape[0] != nb:
        raise ValueError("mask rows differ from bit rows")
    diff = np.zeros((na, nb), dtype=np.int64)
    joint = np.zeros((na, nb), dtype=np.int64)
    cdef int64_t[:, ::1] d = diff
    cdef int64_t[:, ::1] j = joint
    cdef Py_ssize_t i, k, w
    cdef uint64_t m
    cdef int64_t sd, sj
    with nogil:
        for i in range(na):
            for k in range(nb):
                sd = 0
                sj = 0
                for w in range(nw):
                    m = mask_a[i, w] & mask_b[k, w]
                    sj += __builtin_popcountll(m)
                    sd += __builtin_popcountll((bits_a[i, w] ^ bits_b[k, w]) & m)
                d[i, k] = sd
                j[i, k] = sj
    return diff, joint


def hadamard_decode(const uint8_t[:, ::1] blocks):
    cdef Py_ssize_t n = blocks.shape[0], i, j, h, a, best
    if blocks.shape[1] != 64:
        raise ValueError("blocks must have 64 columns")
    messages = np.empty(n, dtype=np.int64)
    corrected = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] msg = messages
    cdef int64_t[::1] cor = corrected
    cdef long w[64]
    cdef long x, y, mag, best_mag
    with nogil:
        for i in range(n):
            for j in range(64):
                w[j] = 1 - 2 * <long>blocks[i, j]
            h = 1
            while h < 64:
                j = 0
                while j < 64:
                    for a in range(j, j + h):
                        x = w[a]
                        y = w[a + h]
                        w[a] = x + y
                        w[a + h] = x - y
                    j += 2 * h
                h *= 2
            best = 0
            best_mag = c_abs(w[0])
            for a in range(1, 64):
                mag = c_abs(w[a])
                if mag > best_mag:
                    best_mag = mag
                    best = a
            msg[i] = best | (64 if w[best] < 0 else 0)
            cor[i] = (64 - best_mag) // 2
    return messages, corrected
