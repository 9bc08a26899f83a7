"""Minimal free resolutions of F2 over F2[G] and chain-map lifting.

A free module of rank r over F2[G] is stored with F2-basis ``(i, g)`` at
index ``i*|G| + g``.  A group-algebra element is one ``uint64`` word whose
bit ``g`` is the coefficient of ``g``; since |G| divides 64, block ``i`` of
a packed vector sits inside a single word.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .f2la import F2Matrix, RowSolver, SubspaceBasis
from .f2la.backend import kernels
from .f2la.matrix import nwords
from .groups import Group

log = logging.getLogger(__name__)

DEFAULT_MAX_DEGREE = 14
MAX_DEGREE_LIMIT = 20
CACHE_FORMAT = "f2quillen-resolution"
CACHE_VERSION = 1
CACHE_ENV = "F2QUILLEN_CACHE_DIR"


class ResolutionError(ValueError):
    """Input outside the scope of the minimal-resolution algorithm."""


class LiftError(RuntimeError):
    """A chain-map lifting system had no solution."""


# packing -------------------------------------------------------------------

def blocks_to_packed(blocks: np.ndarray, n: int) -> np.ndarray:
    """(s, t) group-algebra words -> (s, words(t*n)) packed rows."""
    s, t = blocks.shape
    if n == 64 or t == 0:
        return np.ascontiguousarray(blocks, dtype=np.uint64).reshape(s, t)
    per = 64 // n
    W = nwords(t * n)
    padded = np.zeros((s, W * per), dtype=np.uint64)
    padded[:, :t] = blocks
    padded = padded.reshape(s, W, per)
    shifts = (np.arange(per, dtype=np.uint64) * np.uint64(n))
    return np.bitwise_or.reduce(padded << shifts, axis=2)


def packed_to_blocks(data: np.ndarray, t: int, n: int) -> np.ndarray:
    """Inverse of :func:`blocks_to_packed`."""
    s = data.shape[0]
    if n == 64 or t == 0:
        return np.ascontiguousarray(data[:, :t], dtype=np.uint64)
    per = 64 // n
    mask = np.uint64((1 << n) - 1)
    shifts = (np.arange(per, dtype=np.uint64) * np.uint64(n))
    out = (data[:, :, None] >> shifts) & mask
    return np.ascontiguousarray(out.reshape(s, data.shape[1] * per)[:, :t])


def word_map_table(images: Sequence[int], n_src: int) -> np.ndarray:
    """Byte table sending a word on ``n_src`` bits along ``h -> images[h]``."""
    nbytes = (n_src + 7) // 8
    tab = np.zeros((nbytes, 256), dtype=np.uint64)
    vals = np.arange(256)
    for h in range(n_src):
        has = ((vals >> (h % 8)) & 1).astype(bool)
        tab[h // 8, has] |= np.uint64(1) << np.uint64(int(images[h]))
    return tab


def map_words(words: np.ndarray, table: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(words, dtype=np.uint64).reshape(-1)
    return kernels.permute_words(flat, table).reshape(words.shape)


def parity(words: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(words, dtype=np.uint64).reshape(-1)
    return kernels.parity(flat).reshape(words.shape)


# free module maps -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FreeModuleMap:
    """Map of free F2[G]-modules: source generator j goes to sum_i blocks[j, i] e_i."""

    group: Group
    blocks: np.ndarray

    @property
    def source_rank(self) -> int:
        return int(self.blocks.shape[0])

    @property
    def target_rank(self) -> int:
        return int(self.blocks.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FreeModuleMap):
            return NotImplemented
        return self.group.order == other.group.order and np.array_equal(self.blocks, other.blocks)

    def __repr__(self) -> str:
        return f"FreeModuleMap({self.source_rank} -> {self.target_rank} over {self.group.id})"

    @classmethod
    def zero(cls, group: Group, source_rank: int, target_rank: int) -> "FreeModuleMap":
        return cls(group, np.zeros((source_rank, target_rank), dtype=np.uint64))

    @classmethod
    def identity(cls, group: Group, rank: int) -> "FreeModuleMap":
        blocks = np.zeros((rank, rank), dtype=np.uint64)
        blocks[np.arange(rank), np.arange(rank)] = 1
        return cls(group, blocks)

    @classmethod
    def from_packed(cls, group: Group, rows: F2Matrix) -> "FreeModuleMap":
        n = group.order
        if rows.ncols % n:
            raise ValueError("packed width is not a multiple of the group order")
        return cls(group, packed_to_blocks(rows.data, rows.ncols // n, n))

    def packed(self) -> F2Matrix:
        n = self.group.order
        return F2Matrix(blocks_to_packed(self.blocks, n), self.target_rank * n)

    def induced(self) -> F2Matrix:
        """The (source_rank*|G|) x (target_rank*|G|) matrix of the regular action."""
        n = self.group.order
        data = kernels.induce(np.ascontiguousarray(self.blocks), self.group.left_perm_tables, n)
        return F2Matrix(data, self.target_rank * n)

    def augmentation(self) -> np.ndarray:
        """Coefficient sums of the blocks, a (source_rank, target_rank) 0/1 array."""
        return parity(self.blocks)

    def is_minimal(self) -> bool:
        return not self.augmentation().any()


def compose(outer: FreeModuleMap, inner: FreeModuleMap) -> FreeModuleMap:
    """``outer`` after ``inner``."""
    if inner.target_rank != outer.source_rank:
        raise ValueError("ranks do not match")
    if inner.source_rank == 0 or outer.target_rank == 0 or inner.target_rank == 0:
        return FreeModuleMap.zero(outer.group, inner.source_rank, outer.target_rank)
    return FreeModuleMap.from_packed(outer.group, inner.packed() @ outer.induced())


def act(group: Group, g: int, vectors: F2Matrix) -> F2Matrix:
    """Left multiplication by ``g`` on packed rows of a free module."""
    n = group.order
    rank = vectors.ncols // n
    blocks = packed_to_blocks(vectors.data, rank, n)
    moved = map_words(blocks, group.left_perm_tables[g])
    return F2Matrix(blocks_to_packed(moved, n), vectors.ncols)


def minimal_generators(group: Group, k: SubspaceBasis | F2Matrix, check: bool = True) -> F2Matrix:
    """Vectors of K projecting to a basis of K / I K, I the augmentation ideal.

    ``k`` is an F2[G]-submodule of a free module, given by a basis.  With
    ``check`` the submodule is first verified to be G-stable.
    """
    basis = k if isinstance(k, SubspaceBasis) else SubspaceBasis.span(k)
    dim = basis.ambient_dim
    if dim % group.order:
        raise ValueError("ambient dimension is not a multiple of the group order")
    if basis.dim == 0:
        return F2Matrix.zeros(0, dim)
    moved = []
    for g in group.generators:
        moved.append(act(group, g, basis.matrix) ^ basis.matrix)
    ik_rows = F2Matrix.vstack(moved, dim) if moved else F2Matrix.zeros(0, dim)
    if check and not basis.reduce_matrix(ik_rows).is_zero():
        raise ValueError("subspace is not stable under the group action")
    ik = SubspaceBasis.span(ik_rows)
    residues = SubspaceBasis.span(ik.reduce_matrix(basis.matrix))
    return residues.matrix


# resolutions ---------------------------------------------------------------

def _augmentation_matrix(n: int) -> F2Matrix:
    return F2Matrix(np.ones((n, 1), dtype=np.uint64), 1)


class Resolution:
    """Minimal free resolution P_N -> ... -> P_0 -> F2 over F2[G].

    ``differentials[i - 1]`` is d_i : P_i -> P_{i-1}.  Induced matrices and
    row solvers are built on demand and kept.
    """

    def __init__(self, group: Group, betti: Sequence[int], differentials: Sequence[FreeModuleMap]):
        self.group = group
        self.betti = tuple(int(b) for b in betti)
        self.differentials = tuple(differentials)
        self.max_degree = len(self.betti) - 1
        if len(self.differentials) != self.max_degree:
            raise ValueError("need one differential per positive degree")
        self._matrices: dict[int, F2Matrix] = {}
        self._solvers: dict[int, RowSolver] = {}

    def __repr__(self) -> str:
        return f"Resolution({self.group.id}, betti={self.betti})"

    def d(self, i: int) -> FreeModuleMap:
        return self.differentials[i - 1]

    def matrix(self, i: int) -> F2Matrix:
        """Induced matrix of d_i; degree 0 is the augmentation P_0 -> F2."""
        if i not in self._matrices:
            self._matrices[i] = _augmentation_matrix(self.group.order) if i == 0 else self.d(i).induced()
        return self._matrices[i]

    def solver(self, i: int) -> RowSolver:
        if i not in self._solvers:
            self._solvers[i] = RowSolver(self.matrix(i))
        return self._solvers[i]

    def truncate(self, n: int) -> "Resolution":
        if n > self.max_degree:
            raise ValueError("cannot extend by truncating")
        out = Resolution(self.group, self.betti[: n + 1], self.differentials[:n])
        out._matrices = self._matrices
        out._solvers = self._solvers
        return out

    def same_as(self, other: "Resolution") -> bool:
        return self.betti == other.betti and all(
            a == b for a, b in zip(self.differentials, other.differentials)
        )

    def verify(self) -> None:
        """Check d o d = 0, minimality and exactness; raise AssertionError on failure."""
        for i in range(1, self.max_degree + 1):
            if not self.d(i).is_minimal():
                raise AssertionError(f"d_{i} has an entry outside the augmentation ideal")
        for i in range(1, self.max_degree):
            if compose(self.d(i), self.d(i + 1)).blocks.any():
                raise AssertionError(f"d_{i} d_{i + 1} != 0")
        if self.max_degree >= 1 and (self.d(1).packed() @ self.matrix(0)).data.any():
            raise AssertionError("augmentation does not annihilate the image of d_1")
        n = self.group.order
        for i in range(self.max_degree):
            kernel_dim = self.betti[i] * n - self.solver(i).rank
            if kernel_dim != self.solver(i + 1).rank:
                raise AssertionError(f"not exact at P_{i}")

    def to_json(self) -> dict:
        n = self.group.order
        diffs = []
        for f in self.differentials:
            width = f.target_rank * n
            diffs.append([format(r, "x") for r in f.packed().rows()] if width else [])
        return {
            "format": CACHE_FORMAT,
            "version": CACHE_VERSION,
            "group": self.group.id,
            "table_sha256": table_digest(self.group),
            "order": n,
            "max_degree": self.max_degree,
            "betti": list(self.betti),
            "differentials": diffs,
        }

    @classmethod
    def from_json(cls, group: Group, doc: dict) -> "Resolution":
        if doc.get("format") != CACHE_FORMAT or doc.get("version") != CACHE_VERSION:
            raise ValueError("unsupported resolution format")
        if doc.get("table_sha256") != table_digest(group) or doc.get("order") != group.order:
            raise ValueError("cached resolution belongs to a different group")
        betti = [int(b) for b in doc["betti"]]
        if len(betti) != doc["max_degree"] + 1 or len(doc["differentials"]) != doc["max_degree"]:
            raise ValueError("inconsistent resolution document")
        n = group.order
        diffs = []
        for i, rows in enumerate(doc["differentials"], start=1):
            if len(rows) != betti[i]:
                raise ValueError("differential has the wrong number of rows")
            packed = F2Matrix.from_rows([int(r, 16) for r in rows], betti[i - 1] * n)
            diffs.append(FreeModuleMap.from_packed(group, packed))
        return cls(group, betti, diffs)


def table_digest(group: Group) -> str:
    return hashlib.sha256(np.ascontiguousarray(group.mul, dtype=np.int64).tobytes()).hexdigest()


def _compute(group: Group, n: int) -> Resolution:
    order = group.order
    betti = [1]
    diffs: list[FreeModuleMap] = []
    solvers: dict[int, RowSolver] = {}
    matrices: dict[int, F2Matrix] = {0: _augmentation_matrix(order)}
    for j in range(n):
        solver = RowSolver(matrices[j])
        solvers[j] = solver
        gens = minimal_generators(group, _as_basis(solver.kernel), check=False)
        f = FreeModuleMap.from_packed(group, gens)
        betti.append(f.source_rank)
        diffs.append(f)
        matrices[j + 1] = f.induced()
    res = Resolution(group, betti, diffs)
    res._matrices = matrices
    res._solvers = solvers
    return res


def _as_basis(matrix: F2Matrix) -> SubspaceBasis:
    rows = matrix.rows()
    pivots = [(r & -r).bit_length() - 1 for r in rows]
    return SubspaceBasis(matrix, pivots)


def _check_scope(group: Group, n: int) -> None:
    if group.order & (group.order - 1):
        raise ResolutionError(f"{group.id} has order {group.order}, not a power of 2")
    if group.order > 64:
        raise ResolutionError("group order exceeds 64")
    if n < 0:
        raise ResolutionError("degree must be non-negative")
    if n > MAX_DEGREE_LIMIT:
        raise ResolutionError(f"degree {n} exceeds the limit {MAX_DEGREE_LIMIT}")


_MEMO: dict[tuple[str, str], Resolution] = {}


def minimal_resolution(group: Group, n: int = DEFAULT_MAX_DEGREE, cache_dir: str | os.PathLike | None = None) -> Resolution:
    """Minimal resolution of the trivial module through degree ``n``.

    Results are memoized in-process; with ``cache_dir`` they are also read
    from and written to disk.
    """
    _check_scope(group, n)
    key = (group.id, table_digest(group))
    held = _MEMO.get(key)
    if held is not None and held.max_degree >= n:
        return held if held.max_degree == n else held.truncate(n)
    res = None
    if cache_dir is not None:
        res = load_cached(group, n, cache_dir)
    if res is None:
        res = _compute(group, n)
        if cache_dir is not None:
            store_cached(res, cache_dir)
    _MEMO[key] = res
    return res


def clear_memo() -> None:
    _MEMO.clear()


# disk cache ----------------------------------------------------------------

def default_cache_dir() -> str | None:
    return os.environ.get(CACHE_ENV) or None


def cache_path(group: Group, n: int, cache_dir: str | os.PathLike) -> Path:
    safe = re.sub(r"[^A-Za-z0-9]+", "_", group.id).strip("_") or "g"
    digest = table_digest(group)[:12]
    return Path(cache_dir) / f"{safe}-{digest}-N{n}-v{CACHE_VERSION}.json"


def load_cached(group: Group, n: int, cache_dir: str | os.PathLike) -> Resolution | None:
    """Cached resolution, or None when absent or unreadable."""
    path = cache_path(group, n, cache_dir)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        return Resolution.from_json(group, doc)
    except FileNotFoundError:
        return None
    except (ValueError, KeyError, TypeError) as exc:
        log.warning("ignoring unreadable cache file %s (%s); recomputing", path, exc)
        return None


def store_cached(res: Resolution, cache_dir: str | os.PathLike) -> Path:
    path = cache_path(res.group, res.max_degree, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(res.to_json(), sort_keys=True, separators=(",", ":"))
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# chain maps ----------------------------------------------------------------

def lift_chain_map(
    source: Resolution,
    target: Resolution,
    base: np.ndarray,
    degrees: int,
    shift: int = 0,
    hom: Sequence[int] | None = None,
) -> list[FreeModuleMap]:
    """Lift a degree-0 map to a chain map from ``source`` (shifted) to ``target``.

    Returns F_0..F_degrees with F_i : P_{shift+i} -> Q_i and
    d^Q_i F_i = F_{i-1} d^P_{shift+i}.  The source group acts on the
    target through the injective homomorphism ``hom`` (source element ->
    target element), the identity by default.  ``base`` holds the
    (b_shift, 1) blocks of F_0; it must satisfy the degree-0 condition for
    the lift to exist.
    """
    tg = target.group
    n_src = source.group.order
    if hom is None:
        if source.group.order != tg.order:
            raise ValueError("a homomorphism is required between different groups")
        hom = tuple(range(n_src))
    if shift + degrees > source.max_degree or degrees > target.max_degree:
        raise ValueError("resolutions are too short for the requested lift")
    table = word_map_table(hom, n_src)
    base = np.asarray(base, dtype=np.uint64).reshape(source.betti[shift], target.betti[0])
    maps = [FreeModuleMap(tg, base.copy())]
    for i in range(1, degrees + 1):
        d_src = source.d(shift + i)
        mapped = FreeModuleMap(tg, map_words(d_src.blocks, table))
        rhs = compose(maps[-1], mapped)
        y = rhs.packed()
        solver = target.solver(i)
        if y.nrows == 0:
            x = F2Matrix.zeros(0, target.betti[i] * tg.order)
        else:
            try:
                x = solver.solve(y)
            except ValueError as exc:
                raise LiftError(f"no lift in degree {i}") from exc
        maps.append(FreeModuleMap.from_packed(tg, x))
    return maps


def cohomology_map(chain: FreeModuleMap) -> np.ndarray:
    """Matrix of the induced map on cochains: out[i, k] = aug(F[i, k])."""
    return chain.augmentation()
