# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Word-packed GF(2) kernels.

Rows are little-endian bit strings: column ``c`` lives in word ``c >> 6`` at
bit ``c & 63``.  Padding bits past the logical width must be zero.
"""

import numpy as np

from libc.stdint cimport uint64_t, int64_t
from libc.string cimport memset

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil
    int __builtin_popcountll(unsigned long long) nogil

BACKEND = "compiled"

cdef enum:
    KBITS = 8


cdef inline int _getbit(const uint64_t* row, Py_ssize_t c) noexcept nogil:
    return <int>((row[c >> 6] >> (c & 63)) & 1)


cdef inline void _xor(uint64_t* dst, const uint64_t* src, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t w
    for w in range(lo, hi):
        dst[w] ^= src[w]


cdef inline void _swap(uint64_t* a, uint64_t* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t w
    cdef uint64_t t
    for w in range(n):
        t = a[w]
        a[w] = b[w]
        b[w] = t


cdef Py_ssize_t _first_bit(const uint64_t* row, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t w, pos
    cdef uint64_t word
    if lo >= hi:
        return -1
    w = lo >> 6
    word = row[w] & (~(<uint64_t>0) << (lo & 63))
    while True:
        if word:
            pos = (w << 6) + __builtin_ctzll(word)
            return pos if pos < hi else -1
        w += 1
        if (w << 6) >= hi:
            return -1
        word = row[w]


def rref(uint64_t[:, ::1] a, Py_ssize_t pivot_cols):
    """Reduce ``a`` in place to reduced row echelon form.

    Pivots are searched only among columns ``< pivot_cols``; every row is
    still reduced across its full width.  Pivot rows end up first, sorted by
    pivot column.  Returns the list of pivot columns.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t W = a.shape[1]
    if m == 0 or W == 0 or pivot_cols <= 0:
        return []
    cdef uint64_t* base = &a[0, 0]
    table_arr = np.zeros((1 << KBITS, W), dtype=np.uint64)
    cdef uint64_t[:, ::1] table = table_arr
    cdef uint64_t* tab = &table[0, 0]
    piv_arr = np.empty(min(m, pivot_cols), dtype=np.int64)
    cdef int64_t[::1] piv = piv_arr
    cdef Py_ssize_t pr[KBITS]
    cdef Py_ssize_t pc[KBITS]
    cdef Py_ssize_t r = 0, c = 0, cend, i, j, l, kb, w0, b, idx, x, tmp
    cdef uint64_t* rowi
    cdef uint64_t* dst
    cdef uint64_t* src
    cdef Py_ssize_t npiv = 0
    with nogil:
        while c < pivot_cols and r < m:
            cend = c + KBITS
            if cend > pivot_cols:
                cend = pivot_cols
            w0 = c >> 6
            kb = 0
            i = r
            while i < m and kb < cend - c:
                rowi = base + i * W
                for j in range(kb):
                    if _getbit(rowi, pc[j]):
                        _xor(rowi, base + pr[j] * W, w0, W)
                b = _first_bit(rowi, c, cend)
                if b >= 0:
                    for j in range(kb):
                        if _getbit(base + pr[j] * W, b):
                            _xor(base + pr[j] * W, rowi, w0, W)
                    pr[kb] = i
                    pc[kb] = b
                    kb += 1
                i += 1
            if kb == 0:
                c = cend
                continue
            for j in range(kb):
                if pr[j] != r + j:
                    _swap(base + (r + j) * W, base + pr[j] * W, W)
                pr[j] = r + j
            for j in range(1, kb):
                l = j
                while l > 0 and pc[l - 1] > pc[l]:
                    _swap(base + (r + l - 1) * W, base + (r + l) * W, W)
                    tmp = pc[l - 1]
                    pc[l - 1] = pc[l]
                    pc[l] = tmp
                    l -= 1
            memset(tab + w0, 0, (W - w0) * sizeof(uint64_t))
            for x in range(1, 1 << kb):
                j = __builtin_ctzll(<unsigned long long>x)
                dst = tab + x * W
                src = tab + (x & (x - 1)) * W
                rowi = base + (r + j) * W
                for l in range(w0, W):
                    dst[l] = src[l] ^ rowi[l]
            for i in range(m):
                if i >= r and i < r + kb:
                    continue
                rowi = base + i * W
                idx = 0
                for j in range(kb):
                    idx |= _getbit(rowi, pc[j]) << j
                if idx:
                    _xor(rowi, tab + idx * W, w0, W)
            for j in range(kb):
                piv[npiv] = pc[j]
                npiv += 1
            r += kb
            c = cend
    return [int(v) for v in piv_arr[:npiv]]


def matmul(const uint64_t[:, ::1] a, Py_ssize_t k, const uint64_t[:, ::1] b):
    """Return ``a @ b`` over GF(2); ``a`` is m x k, ``b`` is k x n."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t Wb = b.shape[1]
    out_arr = np.zeros((m, Wb), dtype=np.uint64)
    if m == 0 or Wb == 0 or k == 0:
        return out_arr
    cdef uint64_t[:, ::1] out = out_arr
    table_arr = np.zeros((1 << KBITS, Wb), dtype=np.uint64)
    cdef uint64_t[:, ::1] table = table_arr
    cdef uint64_t* tab = &table[0, 0]
    cdef uint64_t* ob = &out[0, 0]
    cdef Py_ssize_t Wa = a.shape[1]
    cdef const uint64_t* ab = &a[0, 0]
    cdef const uint64_t* bb = &b[0, 0]
    cdef Py_ssize_t k0, kk, x, j, l, i
    cdef uint64_t mask, byte
    cdef uint64_t* dst
    cdef uint64_t* src
    cdef const uint64_t* brow
    with nogil:
        k0 = 0
        while k0 < k:
            kk = k - k0
            if kk > KBITS:
                kk = KBITS
            mask = (<uint64_t>1 << kk) - 1
            for x in range(1, 1 << kk):
                j = __builtin_ctzll(<unsigned long long>x)
                dst = tab + x * Wb
                src = tab + (x & (x - 1)) * Wb
                brow = bb + (k0 + j) * Wb
                for l in range(Wb):
                    dst[l] = src[l] ^ brow[l]
            for i in range(m):
                byte = (ab[i * Wa + (k0 >> 6)] >> (k0 & 63)) & mask
                if byte:
                    _xor(ob + i * Wb, tab + byte * Wb, 0, Wb)
            k0 += KBITS
    return out_arr


def induce(const uint64_t[:, ::1] blocks, const uint64_t[:, :, ::1] perm, Py_ssize_t n):
    """Regular-representation matrix of a map of free F2[G]-modules.

    ``blocks[i, k]`` is an n-bit group-algebra element; row ``i*n + g`` of
    the result is ``g * (row i)``.  ``n`` must be a power of two <= 64.
    """
    cdef Py_ssize_t bs = blocks.shape[0]
    cdef Py_ssize_t bt = blocks.shape[1]
    cdef Py_ssize_t W = (bt * n + 63) >> 6
    out_arr = np.zeros((bs * n, W), dtype=np.uint64)
    if bs == 0 or W == 0:
        return out_arr
    cdef uint64_t[:, ::1] out = out_arr
    cdef Py_ssize_t nbytes = (n + 7) >> 3
    cdef Py_ssize_t i, g, k, p, off
    cdef uint64_t w, v
    cdef uint64_t* row
    with nogil:
        for i in range(bs):
            for k in range(bt):
                w = blocks[i, k]
                if w == 0:
                    continue
                off = k * n
                for g in range(n):
                    v = 0
                    for p in range(nbytes):
                        v |= perm[g, p, (w >> (p << 3)) & 255]
                    row = &out[i * n + g, 0]
                    row[off >> 6] |= v << (off & 63)
    return out_arr


def permute_words(const uint64_t[::1] words, const uint64_t[:, ::1] table):
    """Apply one left-multiplication permutation to every group-algebra word."""
    cdef Py_ssize_t m = words.shape[0]
    cdef Py_ssize_t nbytes = table.shape[0]
    out_arr = np.zeros(m, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef Py_ssize_t i, p
    cdef uint64_t w, v
    with nogil:
        for i in range(m):
            w = words[i]
            if w == 0:
                continue
            v = 0
            for p in range(nbytes):
                v |= table[p, (w >> (p << 3)) & 255]
            out[i] = v
    return out_arr


def parity(const uint64_t[::1] words):
    """Coefficient sum (augmentation) of each group-algebra word, as uint8."""
    cdef Py_ssize_t m = words.shape[0]
    out_arr = np.zeros(m, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[i] = __builtin_popcountll(words[i]) & 1
    return out_arr
