"""Dense word-packed matrices over the two-element field."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .backend import kernels


def nwords(ncols: int) -> int:
    return (ncols + 63) >> 6


def ints_to_words(rows: Sequence[int], ncols: int) -> np.ndarray:
    W = nwords(ncols)
    if not rows:
        return np.zeros((0, W), dtype=np.uint64)
    buf = b"".join(int(r).to_bytes(W * 8, "little") for r in rows)
    return np.frombuffer(buf, dtype=np.uint64).reshape(len(rows), W).copy()


def words_to_ints(data: np.ndarray) -> list[int]:
    if data.shape[0] == 0:
        return []
    raw = np.ascontiguousarray(data).tobytes()
    step = data.shape[1] * 8
    if step == 0:
        return [0] * data.shape[0]
    return [int.from_bytes(raw[i:i + step], "little") for i in range(0, len(raw), step)]


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, words) uint64."""
    bits = np.asarray(bits, dtype=np.uint8) & 1
    rows, cols = bits.shape
    W = nwords(cols)
    packed = np.packbits(bits, axis=1, bitorder="little")
    out = np.zeros((rows, W * 8), dtype=np.uint8)
    out[:, :packed.shape[1]] = packed
    return out.view(np.uint64).reshape(rows, W)


def unpack_bits(data: np.ndarray, ncols: int) -> np.ndarray:
    rows = data.shape[0]
    if rows == 0 or ncols == 0:
        return np.zeros((rows, ncols), dtype=np.uint8)
    raw = np.ascontiguousarray(data).view(np.uint8).reshape(rows, -1)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :ncols]


class F2Matrix:
    """A rows x cols matrix over F2 with each row packed into 64-bit words.

    Bit ``c`` of row ``i`` is word ``c // 64``, bit ``c % 64``.  Padding bits
    are kept at zero.
    """

    __slots__ = ("data", "ncols")

    def __init__(self, data: np.ndarray, ncols: int):
        data = np.ascontiguousarray(data, dtype=np.uint64)
        if data.ndim != 2 or data.shape[1] != nwords(ncols):
            raise ValueError(f"storage shape {data.shape} does not fit {ncols} columns")
        self.data = data
        self.ncols = int(ncols)

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int) -> "F2Matrix":
        return cls(np.zeros((rows, nwords(cols)), dtype=np.uint64), cols)

    @classmethod
    def identity(cls, n: int) -> "F2Matrix":
        bits = np.eye(n, dtype=np.uint8)
        return cls(pack_bits(bits), n)

    @classmethod
    def from_rows(cls, rows: Sequence[int], ncols: int) -> "F2Matrix":
        for r in rows:
            if r < 0 or r >> ncols:
                raise ValueError("row does not fit in the column count")
        return cls(ints_to_words(list(rows), ncols), ncols)

    @classmethod
    def from_dense(cls, bits: Iterable) -> "F2Matrix":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(pack_bits(arr), arr.shape[1])

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "F2Matrix":
        return cls.from_dense(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    # shape / access -----------------------------------------------------
    @property
    def nrows(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def row(self, i: int) -> int:
        return int.from_bytes(self.data[i].tobytes(), "little")

    def rows(self) -> list[int]:
        return words_to_ints(self.data)

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self.data, self.ncols)

    def copy(self) -> "F2Matrix":
        return F2Matrix(self.data.copy(), self.ncols)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, F2Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self) -> str:
        return f"F2Matrix({self.nrows}x{self.ncols})"

    def is_zero(self) -> bool:
        return not self.data.any()

    # algebra ------------------------------------------------------------
    def __matmul__(self, other: "F2Matrix") -> "F2Matrix":
        if self.ncols != other.nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        return F2Matrix(kernels.matmul(self.data, self.ncols, other.data), other.ncols)

    def __xor__(self, other: "F2Matrix") -> "F2Matrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return F2Matrix(self.data ^ other.data, self.ncols)

    __add__ = __xor__

    def apply(self, v: int) -> int:
        """Column-convention product ``self @ v`` for a bit-vector ``v``."""
        out = 0
        for i, r in enumerate(self.rows()):
            if (r & v).bit_count() & 1:
                out |= 1 << i
        return out

    def transpose(self) -> "F2Matrix":
        return F2Matrix.from_dense(self.to_dense().T) if self.nrows else F2Matrix.zeros(self.ncols, 0)

    T = property(transpose)

    def take_rows(self, idx) -> "F2Matrix":
        return F2Matrix(self.data[np.asarray(idx, dtype=np.intp)], self.ncols)

    def gather_columns(self, cols: Sequence[int]) -> "F2Matrix":
        cols = np.asarray(cols, dtype=np.int64)
        if cols.size == 0 or self.nrows == 0:
            return F2Matrix.zeros(self.nrows, int(cols.size))
        bits = (self.data[:, cols >> 6] >> (cols & 63).astype(np.uint64)) & np.uint64(1)
        return F2Matrix(pack_bits(bits.astype(np.uint8)), int(cols.size))

    @staticmethod
    def vstack(mats: Sequence["F2Matrix"], ncols: int | None = None) -> "F2Matrix":
        if ncols is None:
            if not mats:
                raise ValueError("need ncols for an empty stack")
            ncols = mats[0].ncols
        if any(m.ncols != ncols for m in mats):
            raise ValueError("column counts differ")
        if not mats:
            return F2Matrix.zeros(0, ncols)
        return F2Matrix(np.vstack([m.data for m in mats]), ncols)

    @staticmethod
    def hstack_aligned(left: "F2Matrix", right: "F2Matrix") -> tuple["F2Matrix", int]:
        """Concatenate with ``right`` starting on a word boundary.

        Returns the combined matrix and the column offset of ``right``.
        """
        if left.nrows != right.nrows:
            raise ValueError("row counts differ")
        offset = left.data.shape[1] * 64
        data = np.hstack([left.data, right.data])
        return F2Matrix(data, offset + right.ncols) if right.ncols else F2Matrix(data, offset), offset


def rref(m: F2Matrix, pivot_cols: int | None = None) -> tuple[F2Matrix, list[int]]:
    """Reduced row echelon form (a copy) and its pivot columns."""
    out = m.copy()
    pivots = kernels.rref(out.data, m.ncols if pivot_cols is None else pivot_cols)
    return out, pivots


def rank(m: F2Matrix) -> int:
    return len(rref(m)[1])
