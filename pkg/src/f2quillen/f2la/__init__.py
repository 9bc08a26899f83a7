"""Exact dense linear algebra over F2."""

from .backend import BACKEND, available
from .matrix import F2Matrix, nwords, pack_bits, rank, rref, unpack_bits
from .subspace import (
    RowSolver,
    SubspaceBasis,
    image_basis,
    intersect,
    kernel_basis,
    membership,
    solve,
    subspace_sum,
)

__all__ = [
    "BACKEND",
    "F2Matrix",
    "RowSolver",
    "SubspaceBasis",
    "available",
    "image_basis",
    "intersect",
    "kernel_basis",
    "membership",
    "nwords",
    "pack_bits",
    "rank",
    "rref",
    "solve",
    "subspace_sum",
    "unpack_bits",
]
