# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: full-enumeration scans over F_d^{2n}.

Same contract and bit-identical outputs as ``_core_py``; see that
module for the index and accumulation-order conventions.
"""

from libc.stdlib cimport calloc, free

import numpy as np


cdef inline void _insertion_sort(int *a, int n) noexcept nogil:
    cdef int i, j, v
    for i in range(1, n):
        v = a[i]
        j = i - 1
        while j >= 0 and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


def hc_scores(int n, int d, const double[::1] ln_table):
    cdef int width = 2 * n
    cdef int m = d * d
    cdef long long N = 1
    cdef int j
    for j in range(width):
        N *= d
    out_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] out = out_arr

    cdef int *dig = <int *> calloc(width, sizeof(int))
    cdef int *sym = <int *> calloc(n, sizeof(int))
    cdef long long *cnt = <long long *> calloc(m * m, sizeof(long long))
    cdef long long *rows = <long long *> calloc(m, sizeof(long long))
    cdef int *cells = <int *> calloc(n, sizeof(int))
    cdef int *trows = <int *> calloc(n, sizeof(int))
    if not (dig and sym and cnt and rows and cells and trows):
        raise MemoryError()

    cdef long long idx, rem
    cdef int t, code, a, ncells, nrows
    cdef double acc
    with nogil:
        for idx in range(N):
            rem = idx
            for j in range(width - 1, -1, -1):
                dig[j] = rem % d
                rem //= d
            for t in range(n):
                sym[t] = dig[2 * t] + d * dig[2 * t + 1]
            ncells = 0
            nrows = 0
            for t in range(n - 1):
                code = sym[t] * m + sym[t + 1]
                if cnt[code] == 0:
                    cells[ncells] = code
                    ncells += 1
                cnt[code] += 1
                if rows[sym[t]] == 0:
                    trows[nrows] = sym[t]
                    nrows += 1
                rows[sym[t]] += 1
            if ncells == nrows:
                # deterministic empirical kernel: H_c = 0 exactly
                out[idx] = 0.0
            else:
                _insertion_sort(trows, nrows)
                _insertion_sort(cells, ncells)
                acc = 0.0
                for t in range(nrows):
                    a = trows[t]
                    acc += rows[a] * ln_table[rows[a]]
                for t in range(ncells):
                    code = cells[t]
                    acc -= cnt[code] * ln_table[cnt[code]]
                out[idx] = acc
            for t in range(ncells):
                cnt[cells[t]] = 0
            for t in range(nrows):
                rows[trows[t]] = 0
    free(dig); free(sym); free(cnt); free(rows); free(cells); free(trows)
    return out_arr


def seq_probs(int n, int d, const double[:, ::1] transition, const double[::1] initial):
    cdef int width = 2 * n
    cdef long long N = 1
    cdef int j
    for j in range(width):
        N *= d
    out_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] out = out_arr

    cdef int *dig = <int *> calloc(width, sizeof(int))
    cdef int *sym = <int *> calloc(n, sizeof(int))
    if not (dig and sym):
        raise MemoryError()

    cdef long long idx, rem
    cdef int t
    cdef double p
    with nogil:
        for idx in range(N):
            rem = idx
            for j in range(width - 1, -1, -1):
                dig[j] = rem % d
                rem //= d
            for t in range(n):
                sym[t] = dig[2 * t] + d * dig[2 * t + 1]
            p = initial[sym[0]]
            for t in range(n - 1):
                p = p * transition[sym[t], sym[t + 1]]
            out[idx] = p
    free(dig); free(sym)
    return out_arr


def syndrome_keys(int n, int d, const long long[:, ::1] wbasis):
    cdef int width = 2 * n
    cdef long long N = 1
    cdef int j
    for j in range(width):
        N *= d
    cdef int r = wbasis.shape[0]
    out_arr = np.zeros(N, dtype=np.int64)
    cdef long long[::1] out = out_arr
    if r == 0:
        return out_arr
    if wbasis.shape[1] != width:
        raise ValueError("wbasis width mismatch")

    cdef int *dig = <int *> calloc(width, sizeof(int))
    if not dig:
        raise MemoryError()

    cdef long long idx, rem, key, weight, acc
    cdef int t
    with nogil:
        for idx in range(N):
            rem = idx
            for j in range(width - 1, -1, -1):
                dig[j] = rem % d
                rem //= d
            key = 0
            weight = 1
            for t in range(r):
                acc = 0
                for j in range(width):
                    acc += dig[j] * wbasis[t, j]
                key += (acc % d) * weight
                weight *= d
            out[idx] = key
    free(dig)
    return out_arr


def coset_min(const long long[::1] keys, const double[::1] scores, long long num_keys):
    cdef long long N = keys.shape[0]
    if scores.shape[0] != N:
        raise ValueError("keys and scores length mismatch")
    out_arr = np.empty(num_keys, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef double *best = <double *> calloc(num_keys, sizeof(double))
    if not best:
        raise MemoryError()

    cdef long long i, k, seen = 0
    cdef bint bad_key = False
    with nogil:
        for k in range(num_keys):
            out[k] = -1
        for i in range(N):
            k = keys[i]
            if k < 0 or k >= num_keys:
                bad_key = True
                break
            if out[k] < 0:
                out[k] = i
                best[k] = scores[i]
                seen += 1
            elif scores[i] < best[k]:
                out[k] = i
                best[k] = scores[i]
    free(best)
    if bad_key:
        raise ValueError("syndrome key out of range")
    if seen != num_keys:
        raise ValueError(f"expected {num_keys} cosets, found {seen}")
    return out_arr
