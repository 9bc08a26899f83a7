"""Pure-Python fallback for the compiled GF(2) kernels.

Same signatures and results as ``_core``; rows are handled as Python ints
so that XOR of whole rows stays in C.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _to_ints(a: np.ndarray) -> list[int]:
    raw = np.ascontiguousarray(a).tobytes()
    step = a.shape[1] * 8
    return [int.from_bytes(raw[i:i + step], "little") for i in range(0, len(raw), step)]


def _from_ints(rows: list[int], words: int, out: np.ndarray | None = None) -> np.ndarray:
    nbytes = words * 8
    buf = b"".join(r.to_bytes(nbytes, "little") for r in rows)
    arr = np.frombuffer(buf, dtype=np.uint64).reshape(len(rows), words)
    if out is None:
        return arr.copy()
    out[...] = arr
    return out


def rref(a: np.ndarray, pivot_cols: int) -> list[int]:
    m, W = a.shape
    if m == 0 or W == 0 or pivot_cols <= 0:
        return []
    rows = _to_ints(a)
    pivots: list[int] = []
    r = 0
    for c in range(pivot_cols):
        if r == m:
            break
        bit = 1 << c
        p = next((i for i in range(r, m) if rows[i] & bit), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pr = rows[r]
        for i in range(m):
            if i != r and rows[i] & bit:
                rows[i] ^= pr
        pivots.append(c)
        r += 1
    _from_ints(rows, W, out=a)
    return pivots


def matmul(a: np.ndarray, k: int, b: np.ndarray) -> np.ndarray:
    m = a.shape[0]
    Wb = b.shape[1]
    if m == 0 or Wb == 0 or k == 0:
        return np.zeros((m, Wb), dtype=np.uint64)
    arows = _to_ints(a)
    brows = _to_ints(b)
    out = []
    for x in arows:
        acc = 0
        while x:
            low = x & -x
            acc ^= brows[low.bit_length() - 1]
            x ^= low
        out.append(acc)
    return _from_ints(out, Wb)


def induce(blocks: np.ndarray, perm: np.ndarray, n: int) -> np.ndarray:
    bs, bt = blocks.shape
    W = (bt * n + 63) // 64
    out = np.zeros((bs * n, W), dtype=np.uint64)
    if bs == 0 or W == 0:
        return out
    nbytes = (n + 7) // 8
    for g in range(n):
        v = np.zeros((bs, bt), dtype=np.uint64)
        for p in range(nbytes):
            v |= perm[g, p][((blocks >> np.uint64(8 * p)) & np.uint64(255)).astype(np.intp)]
        for k in range(bt):
            off = k * n
            out[g::n, off // 64] |= v[:, k] << np.uint64(off % 64)
    return out


def permute_words(words: np.ndarray, table: np.ndarray) -> np.ndarray:
    out = np.zeros(words.shape[0], dtype=np.uint64)
    for p in range(table.shape[0]):
        out |= table[p][((words >> np.uint64(8 * p)) & np.uint64(255)).astype(np.intp)]
    return out


def parity(words: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(words) & 1).astype(np.uint8)
