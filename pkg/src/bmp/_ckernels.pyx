# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors ``bmp._pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t
from libc.string cimport memset

cnp.import_array()

NAME = "cython"

cdef int64_t MAX_COUNTING_BUCKETS = 1 << 20


cdef inline uint32_t _u32le(const uint8_t[::1] data, int64_t p) noexcept nogil:
    return (<uint32_t>data[p]) | (<uint32_t>data[p + 1] << 8) | \
        (<uint32_t>data[p + 2] << 16) | (<uint32_t>data[p + 3] << 24)


def read_term_header(const uint8_t[::1] data, int64_t start):
    return int(_u32le(data, start)), int(data[start + 4])


def decode_term(const uint8_t[::1] data, int64_t start):
    cdef uint32_t count = _u32le(data, start)
    cdef int width = data[start + 4]
    cdef int64_t p = start + 5
    cdef int64_t imp = p + (<int64_t>count * width + 7) // 8
    cdef cnp.ndarray[int64_t, ndim=1] ids = np.empty(count, dtype=np.int64)
    cdef cnp.ndarray[uint8_t, ndim=1] impacts = np.empty(count, dtype=np.uint8)
    cdef uint64_t window = 0
    cdef uint64_t mask = (<uint64_t>1 << width) - 1
    cdef int nbits = 0
    cdef int64_t blk = 0
    cdef uint32_t i
    for i in range(count):
        while nbits < width:
            window |= (<uint64_t>data[p]) << nbits
            p += 1
            nbits += 8
        blk += <int64_t>(window & mask)
        window >>= width
        nbits -= width
        ids[i] = blk
        impacts[i] = data[imp + i]
    return ids, impacts


def upper_bounds_raw(const uint8_t[:, ::1] raw, const uint32_t[::1] terms,
                     const int64_t[::1] weights, uint32_t[::1] out):
    cdef Py_ssize_t nb = out.shape[0]
    cdef Py_ssize_t num_terms = raw.shape[0]
    cdef Py_ssize_t i, j
    cdef uint32_t w
    cdef const uint8_t* row
    with nogil:
        if nb:
            memset(&out[0], 0, nb * sizeof(uint32_t))
        for i in range(terms.shape[0]):
            if terms[i] >= num_terms:
                continue
            w = <uint32_t>weights[i]
            row = &raw[terms[i], 0]
            for j in range(nb):
                out[j] += w * row[j]
    return np.asarray(out)


def upper_bounds_compressed(const uint8_t[::1] data, const int64_t[::1] offsets,
                            const uint32_t[::1] terms, const int64_t[::1] weights,
                            uint32_t[::1] out):
    cdef Py_ssize_t nb = out.shape[0]
    cdef Py_ssize_t num_terms = offsets.shape[0] - 1
    cdef Py_ssize_t i
    cdef int64_t start, p, imp, blk
    cdef uint32_t count, c, w
    cdef int width, nbits
    cdef uint64_t window, mask
    with nogil:
        if nb:
            memset(&out[0], 0, nb * sizeof(uint32_t))
        for i in range(terms.shape[0]):
            if terms[i] >= num_terms:
                continue
            w = <uint32_t>weights[i]
            start = offsets[terms[i]]
            count = _u32le(data, start)
            width = data[start + 4]
            p = start + 5
            imp = p + (<int64_t>count * width + 7) // 8
            mask = (<uint64_t>1 << width) - 1
            window = 0
            nbits = 0
            blk = 0
            for c in range(count):
                while nbits < width:
                    window |= (<uint64_t>data[p]) << nbits
                    p += 1
                    nbits += 8
                blk += <int64_t>(window & mask)
                window >>= width
                nbits -= width
                out[blk] += w * data[imp + c]
    return np.asarray(out)


def counting_sort_blocks(const uint32_t[::1] ub, int64_t threshold):
    cdef Py_ssize_t n = ub.shape[0]
    cdef Py_ssize_t i, m = 0
    cdef uint32_t lo, hi = 0
    if threshold > 0xFFFFFFFF:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.uint32)
    lo = <uint32_t>(threshold if threshold > 1 else 1)
    for i in range(n):
        if ub[i] >= lo:
            m += 1
            if ub[i] > hi:
                hi = ub[i]
    cdef cnp.ndarray[int64_t, ndim=1] out_ids = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[uint32_t, ndim=1] out_ubs = np.empty(m, dtype=np.uint32)
    if m == 0:
        return out_ids, out_ubs
    cdef int64_t nbuckets = <int64_t>hi - lo + 1
    if nbuckets > MAX_COUNTING_BUCKETS:
        ubarr = np.asarray(ub)
        ids = np.flatnonzero(ubarr >= lo)
        vals = ubarr[ids]
        order = np.lexsort((ids, -vals.astype(np.int64)))
        return ids[order].astype(np.int64), vals[order]
    cdef cnp.ndarray[int64_t, ndim=1] nxt = np.zeros(nbuckets, dtype=np.int64)
    cdef int64_t run = 0, c
    with nogil:
        for i in range(n):
            if ub[i] >= lo:
                nxt[hi - ub[i]] += 1
        for i in range(nbuckets):
            c = nxt[i]
            nxt[i] = run
            run += c
        for i in range(n):
            if ub[i] >= lo:
                c = nxt[hi - ub[i]]
                out_ids[c] = i
                out_ubs[c] = ub[i]
                nxt[hi - ub[i]] = c + 1
    return out_ids, out_ubs


cdef inline void _accumulate_block(const int64_t[::1] term_ptr, const uint32_t[::1] dir_terms,
                                   const int64_t[::1] post_ptr, const uint8_t[::1] local_ids,
                                   const uint8_t[::1] impacts, int64_t j,
                                   const uint32_t[::1] qterms, const int64_t[::1] qweights,
                                   uint32_t* acc, int b) noexcept nogil:
    cdef int64_t s = term_ptr[j], e = term_ptr[j + 1]
    cdef Py_ssize_t qi = 0, nq = qterms.shape[0]
    cdef int64_t ti = s, p
    cdef uint32_t w
    memset(acc, 0, b * sizeof(uint32_t))
    # linear merge of two ascending term lists
    while qi < nq and ti < e:
        if qterms[qi] < dir_terms[ti]:
            qi += 1
        elif qterms[qi] > dir_terms[ti]:
            ti += 1
        else:
            w = <uint32_t>qweights[qi]
            for p in range(post_ptr[ti], post_ptr[ti + 1]):
                acc[local_ids[p]] += w * impacts[p]
            qi += 1
            ti += 1


def evaluate_block(const int64_t[::1] term_ptr, const uint32_t[::1] dir_terms,
                   const int64_t[::1] post_ptr, const uint8_t[::1] local_ids,
                   const uint8_t[::1] impacts, int b, int64_t j,
                   const uint32_t[::1] qterms, const int64_t[::1] qweights, uint32_t[::1] acc):
    _accumulate_block(term_ptr, dir_terms, post_ptr, local_ids, impacts, j,
                      qterms, qweights, &acc[0], b)
    cdef int i, m = 0
    for i in range(b):
        if acc[i]:
            m += 1
    cdef cnp.ndarray[int64_t, ndim=1] locs = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] scores = np.empty(m, dtype=np.int64)
    m = 0
    for i in range(b):
        if acc[i]:
            locs[m] = i
            scores[m] = acc[i]
            m += 1
    return locs, scores


# min-heap keyed on "worse": lower score, then higher doc id
cdef inline bint _worse(uint32_t s1, int64_t d1, uint32_t s2, int64_t d2) noexcept nogil:
    return s1 < s2 or (s1 == s2 and d1 > d2)


cdef void _sift_down(uint32_t* hs, int64_t* hd, Py_ssize_t size, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t c
    cdef uint32_t s = hs[i]
    cdef int64_t d = hd[i]
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and _worse(hs[c + 1], hd[c + 1], hs[c], hd[c]):
            c += 1
        if not _worse(hs[c], hd[c], s, d):
            break
        hs[i] = hs[c]
        hd[i] = hd[c]
        i = c
    hs[i] = s
    hd[i] = d


cdef void _sift_up(uint32_t* hs, int64_t* hd, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t parent
    cdef uint32_t s = hs[i]
    cdef int64_t d = hd[i]
    while i > 0:
        parent = (i - 1) >> 1
        if not _worse(s, d, hs[parent], hd[parent]):
            break
        hs[i] = hs[parent]
        hd[i] = hd[parent]
        i = parent
    hs[i] = s
    hd[i] = d


def process_blocks(const int64_t[::1] block_ids, const uint32_t[::1] block_ubs,
                   const int64_t[::1] term_ptr, const uint32_t[::1] dir_terms,
                   const int64_t[::1] post_ptr, const uint8_t[::1] local_ids,
                   const uint8_t[::1] impacts, int b,
                   const uint32_t[::1] qterms, const int64_t[::1] qweights,
                   Py_ssize_t k, double alpha, max_blocks):
    cdef int64_t limit = -1 if max_blocks is None else <int64_t>max_blocks
    cdef cnp.ndarray[uint32_t, ndim=1] heap_s = np.empty(k, dtype=np.uint32)
    cdef cnp.ndarray[int64_t, ndim=1] heap_d = np.empty(k, dtype=np.int64)
    cdef cnp.ndarray[uint32_t, ndim=1] acc_arr = np.zeros(b, dtype=np.uint32)
    cdef uint32_t* hs = &heap_s[0]
    cdef int64_t* hd = &heap_d[0]
    cdef uint32_t* acc = &acc_arr[0]
    cdef Py_ssize_t size = 0, i, nblk = block_ids.shape[0]
    cdef int64_t evaluated = 0, j, base, doc
    cdef uint32_t theta, sc
    cdef int loc
    with nogil:
        for i in range(nblk):
            if evaluated == limit:
                break
            theta = hs[0] if size == k else 0
            if <double>theta > alpha * <double>block_ubs[i]:
                break
            j = block_ids[i]
            _accumulate_block(term_ptr, dir_terms, post_ptr, local_ids, impacts, j,
                              qterms, qweights, acc, b)
            evaluated += 1
            base = j * b
            for loc in range(b):
                sc = acc[loc]
                if sc == 0:
                    continue
                doc = base + loc
                if size < k:
                    hs[size] = sc
                    hd[size] = doc
                    _sift_up(hs, hd, size)
                    size += 1
                elif _worse(hs[0], hd[0], sc, doc):
                    hs[0] = sc
                    hd[0] = doc
                    _sift_down(hs, hd, size, 0)
    return heap_d[:size].copy(), heap_s[:size].astype(np.int64), int(evaluated)
