# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Gram level assembly and crossing enumeration."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def gram_level(int n, int d, double q,
               const cnp.int64_t[::1] prev_block_of,
               const cnp.int64_t[::1] prev_pos,
               const cnp.int64_t[::1] prev_size,
               const cnp.int64_t[::1] prev_data_off,
               const double[::1] prev_data,
               const cnp.int64_t[::1] members,
               const cnp.int64_t[::1] member_off,
               const cnp.int64_t[::1] data_off):
    cdef Py_ssize_t total = data_off[data_off.shape[0] - 1]
    out_arr = np.zeros(total, dtype=np.float64)
    cdef double[::1] out = out_arr
    if n == 0:
        out_arr[:] = 1.0
        return out_arr
    cdef cnp.int64_t pw[64]
    cdef int k
    pw[0] = 1
    for k in range(1, n + 1):
        pw[k] = pw[k - 1] * d
    cdef cnp.int64_t dn1 = pw[n - 1]
    cdef double qpow[64]
    qpow[0] = 1.0
    for k in range(1, n):
        qpow[k] = qpow[k - 1] * q
    cdef Py_ssize_t nblocks = member_off.shape[0] - 1
    cdef Py_ssize_t max_nb = 0
    cdef Py_ssize_t b, r, c, m0, nb, base, row, off
    for b in range(nblocks):
        if member_off[b + 1] - member_off[b] > max_nb:
            max_nb = member_off[b + 1] - member_off[b]
    # per column word: its letters and the in-block position of each one-letter deletion
    vdig_arr = np.empty(max_nb * n, dtype=np.int64)
    dpos_arr = np.empty(max_nb * n, dtype=np.int64)
    cdef cnp.int64_t[::1] vdig = vdig_arr
    cdef cnp.int64_t[::1] dpos = dpos_arr
    cdef cnp.int64_t w, v, first, tail, tb, lo
    cdef int j
    cdef double acc
    with nogil:
        for b in range(nblocks):
            m0 = member_off[b]
            nb = member_off[b + 1] - m0
            base = data_off[b]
            for c in range(nb):
                v = members[m0 + c]
                for j in range(n):
                    lo = pw[n - 1 - j]
                    vdig[c * n + j] = (v // lo) % d
                    dpos[c * n + j] = prev_pos[(v // pw[n - j]) * lo + v % lo]
            for r in range(nb):
                w = members[m0 + r]
                first = w // dn1
                tail = w % dn1
                tb = prev_block_of[tail]
                row = prev_data_off[tb] + prev_pos[tail] * prev_size[tb]
                for c in range(nb):
                    off = c * n
                    acc = 0.0
                    for j in range(n):
                        if vdig[off + j] == first:
                            acc = acc + qpow[j] * prev_data[row + dpos[off + j]]
                    out[base + r * nb + c] = acc
    return out_arr


cdef void _pairings(int n, char* matched, long long* hist, int cross) noexcept nogil:
    cdef int i = 0
    cdef int j, between
    while i < n and matched[i]:
        i += 1
    if i == n:
        hist[cross] += 1
        return
    matched[i] = 1
    between = 0
    for j in range(i + 1, n):
        if matched[j]:
            between += 1
            continue
        matched[j] = 1
        _pairings(n, matched, hist, cross + between)
        matched[j] = 0
    matched[i] = 0


def crossing_histogram(int n):
    cdef int half = n // 2
    cdef int size = half * (half - 1) // 2 + 1
    hist_arr = np.zeros(size, dtype=np.int64)
    matched_arr = np.zeros(max(n, 1), dtype=np.int8)
    cdef long long[::1] hist = hist_arr
    cdef char[::1] matched = matched_arr.view(np.int8)
    with nogil:
        _pairings(n, &matched[0], &hist[0], 0)
    return [int(x) for x in hist_arr]
