"""Canonical subspaces and linear solving over F2."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .matrix import F2Matrix, rref, unpack_bits, pack_bits


class SubspaceBasis:
    """A subspace of F2^ambient_dim held by its reduced row echelon basis.

    Each basis vector's lowest set bit is its pivot; no other basis vector
    has that bit, and pivots increase.  Equal subspaces therefore have equal
    bases no matter how they were generated.
    """

    __slots__ = ("ambient_dim", "matrix", "pivots", "_pivot_index")

    def __init__(self, matrix: F2Matrix, pivots: Sequence[int]):
        self.ambient_dim = matrix.ncols
        self.matrix = matrix
        self.pivots = list(pivots)
        self._pivot_index = {p: k for k, p in enumerate(self.pivots)}

    @classmethod
    def span(cls, vectors: F2Matrix | Sequence[int], ambient_dim: int | None = None) -> "SubspaceBasis":
        if not isinstance(vectors, F2Matrix):
            if ambient_dim is None:
                raise ValueError("ambient_dim is required for int vectors")
            vectors = F2Matrix.from_rows(list(vectors), ambient_dim)
        elif ambient_dim is not None and vectors.ncols != ambient_dim:
            raise ValueError("dimension mismatch")
        red, piv = rref(vectors)
        return cls(red.take_rows(range(len(piv))), piv)

    @classmethod
    def zero(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(F2Matrix.zeros(0, ambient_dim), [])

    @classmethod
    def full(cls, ambient_dim: int) -> "SubspaceBasis":
        return cls(F2Matrix.identity(ambient_dim), range(ambient_dim))

    @property
    def dim(self) -> int:
        return len(self.pivots)

    @property
    def basis(self) -> list[int]:
        return self.matrix.rows()

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubspaceBasis):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.matrix == other.matrix

    def __repr__(self) -> str:
        return f"SubspaceBasis(dim={self.dim}, ambient={self.ambient_dim})"

    def reduce(self, v: int) -> int:
        """Remainder of ``v`` after clearing every pivot bit."""
        for k, row in zip(self.pivots, self.basis):
            if v >> k & 1:
                v ^= row
        return v

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0

    def coordinates(self, v: int) -> int:
        """Coefficients of ``v`` in the canonical basis (bit k for vector k)."""
        if not self.contains(v):
            raise ValueError("vector is not in the subspace")
        out = 0
        for k, p in enumerate(self.pivots):
            if v >> p & 1:
                out |= 1 << k
        return out

    def reduce_matrix(self, vectors: F2Matrix) -> F2Matrix:
        """Row-wise ``reduce`` for a whole matrix."""
        if vectors.ncols != self.ambient_dim:
            raise ValueError("dimension mismatch")
        if self.dim == 0 or vectors.nrows == 0:
            return vectors.copy()
        return vectors ^ (vectors.gather_columns(self.pivots) @ self.matrix)


def membership(s: SubspaceBasis, v: int) -> bool:
    return s.contains(v)


def subspace_sum(a: SubspaceBasis, b: SubspaceBasis) -> SubspaceBasis:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("dimension mismatch")
    return SubspaceBasis.span(F2Matrix.vstack([a.matrix, b.matrix], a.ambient_dim))


def intersect(a: SubspaceBasis, b: SubspaceBasis) -> SubspaceBasis:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("dimension mismatch")
    if a.dim == 0 or b.dim == 0:
        return SubspaceBasis.zero(a.ambient_dim)
    stacked = F2Matrix.vstack([a.matrix, b.matrix], a.ambient_dim)
    combos = RowSolver(stacked).kernel
    coeff_a = combos.gather_columns(range(a.dim))
    return SubspaceBasis.span(coeff_a @ a.matrix)


def kernel_basis(m: F2Matrix) -> SubspaceBasis:
    """Canonical basis of {v : m v = 0}."""
    red, piv = rref(m)
    free = [c for c in range(m.ncols) if c not in set(piv)]
    if not free:
        return SubspaceBasis.zero(m.ncols)
    bits = np.zeros((len(free), m.ncols), dtype=np.uint8)
    bits[np.arange(len(free)), free] = 1
    if piv:
        rdense = unpack_bits(red.data[:len(piv)], m.ncols)
        bits[:, piv] = rdense[:, free].T
    return SubspaceBasis.span(F2Matrix(pack_bits(bits), m.ncols))


def image_basis(m: F2Matrix) -> SubspaceBasis:
    """Canonical basis of the column space of ``m``."""
    return SubspaceBasis.span(m.transpose())


def solve(m: F2Matrix, b: int) -> int | None:
    """Some x with m x = b, free variables set to zero; None if b is not in the image."""
    if b < 0 or b >> m.nrows:
        raise ValueError("right-hand side does not match the row count")
    column = F2Matrix.from_rows([(b >> i) & 1 for i in range(m.nrows)], 1)
    aug, offset = F2Matrix.hstack_aligned(m, column)
    red, piv = rref(aug, pivot_cols=m.ncols)
    rows = red.rows()
    for i in range(len(piv), len(rows)):
        if rows[i] >> offset & 1:
            return None
    x = 0
    for k, p in enumerate(piv):
        if rows[k] >> offset & 1:
            x |= 1 << p
    return x


class RowSolver:
    """Repeated solves of x M = y for one fixed matrix M.

    Built from a single reduction of [M | I].  ``kernel`` holds the
    canonical basis of the left kernel {x : x M = 0}.
    """

    def __init__(self, m: F2Matrix):
        self.rows = m.nrows
        self.cols = m.ncols
        aug, offset = F2Matrix.hstack_aligned(m, F2Matrix.identity(m.nrows))
        red, piv = rref(aug)
        r = sum(1 for p in piv if p < m.ncols)
        self.rank = r
        self.pivots = piv[:r]
        wc = offset >> 6
        self.echelon = F2Matrix(red.data[:r, :wc], m.ncols)
        self.transform = F2Matrix(red.data[:r, wc:], m.nrows)
        self.kernel = F2Matrix(red.data[r:, wc:], m.nrows)

    def reduce(self, y: F2Matrix) -> tuple[F2Matrix, F2Matrix]:
        """Split y as x M + residual; residual vanishes on all pivot columns."""
        if y.ncols != self.cols:
            raise ValueError("dimension mismatch")
        if self.rank == 0:
            return F2Matrix.zeros(y.nrows, self.rows), y.copy()
        coeff = y.gather_columns(self.pivots)
        return coeff @ self.transform, y ^ (coeff @ self.echelon)

    def solve(self, y: F2Matrix) -> F2Matrix:
        x, residual = self.reduce(y)
        if not residual.is_zero():
            raise ValueError("right-hand side is not in the row space")
        return x
