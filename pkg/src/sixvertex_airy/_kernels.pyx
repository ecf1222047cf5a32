# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: the six-vertex column sweep and the brute-force tensor sum."""

import numpy as np

cimport cython


def sweep_columns(const double[:, :, ::1] U, double b1, double b2,
                  unsigned char[:, ::1] horiz, long long[::1] exits, long long[:, ::1] record):
    """Advance a batch of six-vertex samples through K columns in place (see the numpy version)."""
    cdef Py_ssize_t S = U.shape[0], K = U.shape[1], M = U.shape[2]
    cdef Py_ssize_t s, x, y
    cdef unsigned char h, carry
    cdef double u
    with nogil:
        for s in range(S):
            for x in range(K):
                carry = 0
                for y in range(M):
                    h = horiz[s, y]
                    if h != carry:
                        u = U[s, x, y]
                        if h:
                            if u >= b2:
                                horiz[s, y] = 0
                                carry = 1
                        elif u >= b1:
                            horiz[s, y] = 1
                            carry = 0
                exits[s] += carry
                record[s, x] = exits[s]


cdef double complex _det(double complex* a, int n) noexcept nogil:
    """Determinant by Gaussian elimination with partial pivoting; destroys a."""
    cdef int i, j, k, piv
    cdef double complex det = 1.0, f, tmp
    cdef double best, mag
    for k in range(n):
        piv = k
        best = abs(a[k * n + k])
        for i in range(k + 1, n):
            mag = abs(a[i * n + k])
            if mag > best:
                best = mag
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            for j in range(n):
                tmp = a[k * n + j]
                a[k * n + j] = a[piv * n + j]
                a[piv * n + j] = tmp
            det = -det
        det = det * a[k * n + k]
        for i in range(k + 1, n):
            f = a[i * n + k] / a[k * n + k]
            for j in range(k + 1, n):
                a[i * n + j] = a[i * n + j] - f * a[k * n + j]
    return det


def direct_term_sum(const double complex[:, ::1] W1, const double complex[:, ::1] C1,
                    const double complex[:, ::1] W2, const double complex[:, ::1] C2,
                    const double complex[:, ::1] Pz, const double complex[:, ::1] Pw,
                    const double complex[:, ::1] Pwz, const double complex[:, ::1] Pzw,
                    int N1, int N2):
    """Sum over every node tuple of det C1 prod W1 det C2 prod W2 prod(cross) (see the numpy version)."""
    cdef Py_ssize_t n = W1.shape[0]
    cdef int dim = 2 * (N1 + N2)
    cdef int i, j, d
    cdef long long[16] idx
    cdef double complex[16] m1
    cdef double complex[16] m2
    cdef double complex total = 0.0, val
    cdef Py_ssize_t k, l, p, q
    if dim > 16:
        raise ValueError("at most 8 variables per term")
    for d in range(dim):
        idx[d] = 0
    with nogil:
        while True:
            val = 1.0
            for i in range(N1):
                val = val * W1[idx[i], idx[N1 + i]]
                for j in range(N1):
                    m1[i * N1 + j] = C1[idx[i], idx[N1 + j]]
            for i in range(N2):
                val = val * W2[idx[2 * N1 + i], idx[2 * N1 + N2 + i]]
                for j in range(N2):
                    m2[i * N2 + j] = C2[idx[2 * N1 + i], idx[2 * N1 + N2 + j]]
            for i in range(N1):
                k = idx[i]
                l = idx[N1 + i]
                for j in range(N2):
                    p = idx[2 * N1 + j]
                    q = idx[2 * N1 + N2 + j]
                    val = val * Pz[p, k] * Pw[q, l] / (Pwz[q, k] * Pzw[p, l])
            if N1 > 0:
                val = val * _det(m1, N1)
            if N2 > 0:
                val = val * _det(m2, N2)
            total = total + val
            # odometer
            d = dim - 1
            while d >= 0:
                idx[d] += 1
                if idx[d] < n:
                    break
                idx[d] = 0
                d -= 1
            if d < 0:
                break
    return complex(total)
