"""Cohomology rings H^*(G; F2) and the ring maps induced by homomorphisms.

A class of degree t is a bit vector over the dual basis of the t-th
resolution generators; minimality makes every such vector a cocycle and
distinct vectors distinct classes.  Ring maps are stored per degree as
0/1 arrays ``M`` with ``(f u)_i = sum_k M[i, k] u_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .f2la import F2Matrix, RowSolver
from .f2la.matrix import nwords, pack_bits, unpack_bits
from .groups import Group, Subgroup, conjugate, identify, get_group, subgroup_group, make_subgroup
from .resolve import (
    DEFAULT_MAX_DEGREE,
    FreeModuleMap,
    Resolution,
    lift_chain_map,
    minimal_resolution,
)


class DegreeError(ValueError):
    """A requested degree lies beyond the truncation."""


@dataclass(frozen=True)
class CohomClass:
    group_id: str
    degree: int
    coords: int

    def __add__(self, other: "CohomClass") -> "CohomClass":
        if (self.group_id, self.degree) != (other.group_id, other.degree):
            raise ValueError("classes live in different groups or degrees")
        return CohomClass(self.group_id, self.degree, self.coords ^ other.coords)

    def is_zero(self) -> bool:
        return self.coords == 0


def _dense_to_rows(m: np.ndarray) -> F2Matrix:
    m = np.asarray(m, dtype=np.uint8)
    return F2Matrix(pack_bits(m), m.shape[1])


def _pack_last(tensor_bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into words."""
    lead = tensor_bits.shape[:-1]
    flat = tensor_bits.reshape(int(np.prod(lead)), tensor_bits.shape[-1])
    return pack_bits(flat).reshape(*lead, nwords(tensor_bits.shape[-1]))


class RingTable:
    """Multiplication table of H^*(G; F2) through degree ``max_degree``.

    ``block(s, t)`` is a ``(b_s, b_t, words(b_{s+t}))`` array of packed
    products of basis classes.  Blocks are computed on first use from the
    lifts of the ring generators (``method="generators"``) or from a direct
    lift of every basis class (``method="lift"``).
    """

    def __init__(self, resolution: Resolution, max_degree: int | None = None, method: str = "generators"):
        n = resolution.max_degree if max_degree is None else max_degree
        if n > resolution.max_degree:
            raise DegreeError("resolution is shorter than the requested table")
        if method not in ("generators", "lift"):
            raise ValueError(f"unknown method {method!r}")
        self.resolution = resolution
        self.group = resolution.group
        self.group_id = resolution.group.id
        self.max_degree = n
        self.method = method
        self.dims = resolution.betti[: n + 1]
        self._blocks: dict[tuple[int, int], np.ndarray] = {}
        self._lifts: dict[tuple[int, int], list[np.ndarray]] = {}
        self.generators: dict[int, list[int]] = {}
        self._decomp: dict[int, tuple[list[tuple[int, int, int]], F2Matrix, list[int]]] = {}
        if method == "generators":
            self._find_generators()
        else:
            self._find_generators_from_blocks()

    def __repr__(self) -> str:
        return f"RingTable({self.group_id}, N={self.max_degree})"

    # lifting ---------------------------------------------------------------

    def lift_matrices(self, degree: int, coords: int) -> list[np.ndarray]:
        """Multiplication by a class: entry t is the (b_{s+t}, b_t) matrix of H^t -> H^{s+t}."""
        key = (degree, coords)
        if key not in self._lifts:
            res = self.resolution
            b = self.dims[degree]
            base = np.array([(coords >> i) & 1 for i in range(b)], dtype=np.uint64).reshape(b, 1)
            maps = lift_chain_map(res, res, base, self.max_degree - degree, shift=degree)
            self._lifts[key] = [f.augmentation() for f in maps]
        return self._lifts[key]

    def _lift_T(self, degree: int, coords: int, t: int) -> F2Matrix:
        # rows indexed by basis of H^t, columns by H^{degree+t}
        return _dense_to_rows(self.lift_matrices(degree, coords)[t].T)

    # generators and decompositions -----------------------------------------

    def _gens_flat(self, below: int) -> list[tuple[int, int]]:
        return [(d, j) for d in sorted(self.generators) if d < below for j in self.generators[d]]

    def _find_generators(self) -> None:
        for s in range(1, self.max_degree + 1):
            b = self.dims[s]
            labels: list[tuple[int, int, int]] = []
            rows: list[F2Matrix] = []
            for d, j in self._gens_flat(s):
                lt = self._lift_T(d, 1 << j, s - d)
                rows.append(lt)
                labels.extend((d, j, k) for k in range(lt.nrows))
            if rows and b:
                stacked = F2Matrix.vstack(rows, b)
                solver = RowSolver(stacked)
                pivots = list(solver.pivots)
                echelon, transform = solver.echelon, solver.transform
            else:
                pivots, echelon, transform = [], F2Matrix.zeros(0, b), F2Matrix.zeros(0, 0)
            gens = [c for c in range(b) if c not in set(pivots)]
            if gens:
                self.generators[s] = gens
            self._decomp[s] = (labels, _pivot_tables(pivots, echelon, transform), gens)

    def _find_generators_from_blocks(self) -> None:
        for s in range(1, self.max_degree + 1):
            b = self.dims[s]
            rows = []
            for a in range(1, s):
                blk = self.block(a, s - a)
                rows.append(F2Matrix(np.ascontiguousarray(blk.reshape(-1, blk.shape[-1])), b))
            dec = F2Matrix.vstack(rows, b) if rows and b else F2Matrix.zeros(0, b)
            pivots = RowSolver(dec).pivots if dec.nrows else []
            gens = [c for c in range(b) if c not in set(pivots)]
            if gens:
                self.generators[s] = gens

    def generator_classes(self) -> list[CohomClass]:
        return [CohomClass(self.group_id, d, 1 << j) for d in sorted(self.generators) for j in self.generators[d]]

    def generator_counts(self) -> dict[int, int]:
        return {d: len(v) for d, v in sorted(self.generators.items())}

    def generator_names(self) -> list[str]:
        out = []
        for d in sorted(self.generators):
            for k, _ in enumerate(self.generators[d]):
                out.append(f"g{d}_{k}")
        return out

    # blocks ----------------------------------------------------------------

    def block(self, s: int, t: int) -> np.ndarray:
        if s < 0 or t < 0 or s + t > self.max_degree:
            raise DegreeError(f"degrees {s}+{t} exceed {self.max_degree}")
        key = (s, t)
        if key not in self._blocks:
            self._blocks[key] = self._compute_block(s, t)
            self._blocks[key].setflags(write=False)
        return self._blocks[key]

    def _compute_block(self, s: int, t: int) -> np.ndarray:
        bs, bt, bst = self.dims[s], self.dims[t], self.dims[s + t]
        W = nwords(bst)
        if s == 0:
            eye = np.eye(bt, dtype=np.uint8)
            return _pack_last(eye.reshape(bs, bt, bst))
        if self.method == "lift":
            out = np.zeros((bs, bt, bst), dtype=np.uint8)
            for i in range(bs):
                out[i] = self.lift_matrices(s, 1 << i)[t].T
            return _pack_last(out)
        labels, (pivot_of, coeffs, extra), gens = self._decomp[s]
        out = np.zeros((bs, bt * W), dtype=np.uint64)
        if bs == 0 or bt == 0:
            return out.reshape(bs, bt, W)
        # contribution of decomposable parts: sum over generators g of C_g (L_g B_{s-|g|,t})
        by_gen: dict[tuple[int, int], list[int]] = {}
        for pos, (d, j, k) in enumerate(labels):
            by_gen.setdefault((d, j), []).append(pos)
        coeff_rows = coeffs  # (bs, len(labels)) 0/1 rows for each basis class
        for (d, j), positions in by_gen.items():
            sub = self.block(s - d, t)  # (b_{s-d}, bt, W')
            bsub = self.dims[s + t - d]
            flat = F2Matrix(np.ascontiguousarray(sub.reshape(-1, sub.shape[-1])), bsub)
            moved = flat @ self._lift_T(d, 1 << j, s + t - d)  # (b_{s-d}*bt, bst)
            moved_rows = F2Matrix(np.ascontiguousarray(moved.data.reshape(self.dims[s - d], bt * W)), bt * W * 64)
            cg = coeff_rows[:, positions]
            if not cg.any():
                continue
            out ^= (_dense_to_rows(cg) @ moved_rows).data
        out = out.reshape(bs, bt, W)
        # generator parts
        for i in range(bs):
            for g in np.flatnonzero(extra[i]):
                lt = self._lift_T(s, 1 << int(g), t)
                out[i] ^= lt.data
        return out

    # products --------------------------------------------------------------

    def product_basis(self, s: int, i: int, t: int, j: int) -> int:
        row = self.block(s, t)[i, j]
        return int.from_bytes(row.tobytes(), "little")

    def cup(self, u: CohomClass, v: CohomClass) -> CohomClass:
        return cup(self, u, v)

    def basis_class(self, degree: int, i: int) -> CohomClass:
        return CohomClass(self.group_id, degree, 1 << i)

    def unit(self) -> CohomClass:
        return CohomClass(self.group_id, 0, 1)

    def left_matrix(self, u: CohomClass, t: int) -> np.ndarray:
        """(b_{s+t}, b_t) matrix of multiplication by ``u`` on H^t."""
        blk = self.block(u.degree, t)
        bits = _bits(u.coords, self.dims[u.degree])
        words = np.bitwise_xor.reduce(blk[bits.astype(bool)], axis=0) if bits.any() else np.zeros(blk.shape[1:], np.uint64)
        return unpack_bits(np.ascontiguousarray(words), self.dims[u.degree + t]).T.copy()

    # verification ----------------------------------------------------------

    def check_unit(self) -> bool:
        for t in range(self.max_degree + 1):
            bt = self.dims[t]
            want = _pack_last(np.eye(bt, dtype=np.uint8).reshape(bt, 1, bt))
            if not np.array_equal(self.block(t, 0), want):
                return False
        return True

    def check_commutative(self) -> bool:
        for s in range(self.max_degree + 1):
            for t in range(s, self.max_degree + 1 - s):
                if not np.array_equal(self.block(s, t), self.block(t, s).transpose(1, 0, 2)):
                    return False
        return True

    def check_associative(self) -> bool:
        """(uv)w = u(vw) on every basis triple, through the truncation degree.

        Uses commutativity of the verified table: u(vw) is read as (vw)u.
        """
        n = self.max_degree
        for s in range(n + 1):
            for t in range(n + 1 - s):
                for r in range(n + 1 - s - t):
                    if not np.array_equal(self._triple_left(s, t, r), self._triple_right(s, t, r)):
                        return False
        return True

    def _triple_left(self, s: int, t: int, r: int) -> np.ndarray:
        bs, bt, br = self.dims[s], self.dims[t], self.dims[r]
        ab = self.block(s, t)
        abc = self.block(s + t, r)
        W = abc.shape[-1]
        if bs * bt == 0 or br == 0:
            return np.zeros((bs, bt, br, W), dtype=np.uint64)
        left = F2Matrix(np.ascontiguousarray(ab.reshape(bs * bt, -1)), self.dims[s + t])
        right = F2Matrix(np.ascontiguousarray(abc.reshape(self.dims[s + t], br * W)), br * W * 64)
        return (left @ right).data.reshape(bs, bt, br, W)

    def _triple_right(self, s: int, t: int, r: int) -> np.ndarray:
        bs, bt, br = self.dims[s], self.dims[t], self.dims[r]
        bc = self.block(t, r)
        bca = self.block(t + r, s)
        W = bca.shape[-1]
        if bt * br == 0 or bs == 0:
            return np.zeros((bs, bt, br, W), dtype=np.uint64)
        left = F2Matrix(np.ascontiguousarray(bc.reshape(bt * br, -1)), self.dims[t + r])
        right = F2Matrix(np.ascontiguousarray(bca.reshape(self.dims[t + r], bs * W)), bs * W * 64)
        prod = (left @ right).data.reshape(bt, br, bs, W)
        return prod.transpose(2, 0, 1, 3)


def _bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)


def _pivot_tables(pivots: Sequence[int], echelon: F2Matrix, transform: F2Matrix):
    """Per basis class i of H^s: coefficients on the stacked decomposables and on generators."""
    b = echelon.ncols
    coeffs = np.zeros((b, transform.ncols), dtype=np.uint8)
    extra = np.zeros((b, b), dtype=np.uint8)
    pivot_of = {p: k for k, p in enumerate(pivots)}
    ech = unpack_bits(echelon.data, b) if echelon.nrows else np.zeros((0, b), np.uint8)
    tr = unpack_bits(transform.data, transform.ncols) if transform.nrows else np.zeros((0, transform.ncols), np.uint8)
    for i in range(b):
        if i in pivot_of:
            k = pivot_of[i]
            coeffs[i] = tr[k]
            row = ech[k].copy()
            row[i] = 0
            extra[i] = row
        else:
            extra[i, i] = 1
    return pivot_of, coeffs, extra


def cup(table: RingTable, u: CohomClass, v: CohomClass) -> CohomClass:
    """Cup product, the bilinear extension of the basis table."""
    if u.degree + v.degree > table.max_degree:
        raise DegreeError(f"degree {u.degree + v.degree} exceeds {table.max_degree}")
    blk = table.block(u.degree, v.degree)
    acc = np.zeros(blk.shape[-1], dtype=np.uint64)
    for i in _set_bits(u.coords):
        for j in _set_bits(v.coords):
            acc ^= blk[i, j]
    return CohomClass(table.group_id, u.degree + v.degree, int.from_bytes(acc.tobytes(), "little"))


def _set_bits(v: int) -> Iterable[int]:
    i = 0
    while v:
        if v & 1:
            yield i
        v >>= 1
        i += 1


def frobenius_power(table: RingTable, u: CohomClass, e: int) -> CohomClass:
    """u^(2^e) by e squarings."""
    if e < 0:
        raise ValueError("exponent must be non-negative")
    if u.degree * (1 << e) > table.max_degree:
        raise DegreeError(f"degree {u.degree * (1 << e)} exceeds {table.max_degree}")
    for _ in range(e):
        u = cup(table, u, u)
    return u


_TABLES: dict[tuple[str, int, str], RingTable] = {}


def ring_table(g: Group, n: int = DEFAULT_MAX_DEGREE, method: str = "generators", cache_dir=None) -> RingTable:
    key = (g.id, n, method)
    if key not in _TABLES:
        _TABLES[key] = RingTable(minimal_resolution(g, n, cache_dir=cache_dir), n, method)
    return _TABLES[key]


# ring maps -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GradedRingMap:
    """Degreewise matrices H^t(source) -> H^t(target), t <= max_degree."""

    source_id: str
    target_id: str
    matrices: tuple[np.ndarray, ...]

    @property
    def max_degree(self) -> int:
        return len(self.matrices) - 1

    def matrix(self, t: int) -> np.ndarray:
        return self.matrices[t]

    def apply(self, u: CohomClass) -> CohomClass:
        m = self.matrices[u.degree]
        x = _bits(u.coords, m.shape[1])
        y = (m.astype(np.int64) @ x) & 1
        return CohomClass(self.target_id, u.degree, _from_bits(y))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedRingMap):
            return NotImplemented
        return (
            self.source_id == other.source_id
            and self.target_id == other.target_id
            and len(self.matrices) == len(other.matrices)
            and all(np.array_equal(a, b) for a, b in zip(self.matrices, other.matrices))
        )

    def then(self, other: "GradedRingMap") -> "GradedRingMap":
        """``other`` after ``self``."""
        n = min(self.max_degree, other.max_degree)
        mats = tuple(((other.matrices[t].astype(np.int64) @ self.matrices[t]) & 1).astype(np.uint8) for t in range(n + 1))
        return GradedRingMap(self.source_id, other.target_id, mats)

    def truncate(self, n: int) -> "GradedRingMap":
        return GradedRingMap(self.source_id, self.target_id, self.matrices[: n + 1])

    @classmethod
    def identity(cls, group_id: str, dims: Sequence[int]) -> "GradedRingMap":
        return cls(group_id, group_id, tuple(np.eye(b, dtype=np.uint8) for b in dims))


def _from_bits(bits: np.ndarray) -> int:
    out = 0
    for i, v in enumerate(bits.tolist()):
        if v:
            out |= 1 << i
    return out


_MAPS: dict[tuple, GradedRingMap] = {}


def induced_map(source: Group, target: Group, hom: Sequence[int], n: int, cache_dir=None) -> GradedRingMap:
    """Pullback H^*(target) -> H^*(source) along an injective hom source -> target."""
    hom = tuple(int(h) for h in hom)
    key = (source.id, target.id, hom)
    held = _MAPS.get(key)
    if held is not None and held.max_degree >= n:
        return held.truncate(n)
    src_res = minimal_resolution(source, n, cache_dir=cache_dir)
    if source.id == target.id and hom == tuple(range(source.order)):
        out = GradedRingMap.identity(target.id, src_res.betti)
    else:
        if len(set(hom)) != source.order:
            raise ValueError("homomorphism is not injective")
        tgt_res = minimal_resolution(target, n, cache_dir=cache_dir)
        base = np.ones((1, 1), dtype=np.uint64)
        maps = lift_chain_map(src_res, tgt_res, base, n, hom=hom)
        out = GradedRingMap(target.id, source.id, tuple(f.augmentation() for f in maps))
    _MAPS[key] = out
    return out


def pullback_by_lifting(source: Group, target: Group, hom: Sequence[int], n: int) -> GradedRingMap:
    """Uncached chain-map lift, used to cross-check special cases."""
    src_res = minimal_resolution(source, n)
    tgt_res = minimal_resolution(target, n)
    maps = lift_chain_map(src_res, tgt_res, np.ones((1, 1), dtype=np.uint64), n, hom=tuple(hom))
    return GradedRingMap(target.id, source.id, tuple(f.augmentation() for f in maps))


def clear_caches() -> None:
    _TABLES.clear()
    _MAPS.clear()
    _MODELS.clear()


# subgroup models -----------------------------------------------------------

@dataclass(frozen=True)
class SubgroupModel:
    """A subgroup identified with a model group: ``embedding[m]`` is the element of the big group."""

    model: Group
    embedding: tuple[int, ...]

    def preimage(self, a: int) -> int:
        return self.embedding.index(a)


_MODELS: dict[tuple[str, tuple[int, ...]], SubgroupModel] = {}


def subgroup_model(g: Group, s: Subgroup) -> SubgroupModel:
    """Deterministic model of ``s``: its catalog group when there is one."""
    key = (g.id, s.elements)
    if key not in _MODELS and s.order == g.order:
        _MODELS[key] = SubgroupModel(g, tuple(range(g.order)))
    if key not in _MODELS:
        abstract = subgroup_group(g, s)
        mid, iso = identify(abstract)
        if mid == abstract.id:
            model = abstract
        else:
            model = get_group(mid)
        _MODELS[key] = SubgroupModel(model, tuple(s.elements[i] for i in iso))
    return _MODELS[key]


def _whole(g: Group) -> Subgroup:
    return make_subgroup(g, range(g.order))


def restriction(big: Group, sub: Subgroup, n: int = DEFAULT_MAX_DEGREE, cache_dir=None) -> GradedRingMap:
    """res: H^*(big) -> H^*(sub), with sub presented by its model group."""
    m = subgroup_model(big, sub)
    if m.model.id == big.id and m.embedding == tuple(range(big.order)):
        return induced_map(big, big, range(big.order), n, cache_dir)
    return induced_map(m.model, big, m.embedding, n, cache_dir)


def subgroup_map(g: Group, h: Subgroup, k: Subgroup, x: int, n: int, cache_dir=None) -> GradedRingMap:
    """H^*(k) -> H^*(h) induced by a -> x^-1 a x from h into k (requires x^-1 h x in k)."""
    mh = subgroup_model(g, h)
    mk = subgroup_model(g, k)
    xinv = int(g.inv[x])
    hom = []
    for a in mh.embedding:
        c = g.conj(xinv, a)
        if c not in k.elements:
            raise ValueError("x^-1 h x is not contained in k")
        hom.append(mk.preimage(c))
    return induced_map(mh.model, mk.model, hom, n, cache_dir)


def conjugation_map(g: Group, sub: Subgroup, x: int, n: int = DEFAULT_MAX_DEGREE, cache_dir=None) -> GradedRingMap:
    """c_x^*: H^*(x sub x^-1) -> H^*(sub), pullback along s -> x s x^-1."""
    target = conjugate(g, sub, x)
    return subgroup_map(g, sub, target, int(g.inv[x]), n, cache_dir)


# degree one ----------------------------------------------------------------

def degree_one_characters(res: Resolution) -> np.ndarray:
    """``chi[i, g]``: value at g of the homomorphism G -> F2 dual to generator i of P_1.

    Computed from g + 1 = d_1(x) and chi_i(g) = aug(x_i).
    """
    g = res.group
    n = g.order
    b1 = res.betti[1] if res.max_degree >= 1 else 0
    chi = np.zeros((b1, n), dtype=np.uint8)
    if b1 == 0:
        return chi
    solver = res.solver(1)
    rhs = F2Matrix.from_rows([1 | (1 << a) if a else 0 for a in range(n)], n)
    x = solver.solve(rhs)
    blocks = FreeModuleMap.from_packed(g, x).augmentation()  # (n, b1)
    return blocks.T.copy()


def character_restriction(big: Group, sub_model: Group, embedding: Sequence[int]) -> np.ndarray:
    """Degree-1 restriction matrix predicted by precomposing characters."""
    chi_big = degree_one_characters(minimal_resolution(big, 1))
    chi_sub = degree_one_characters(minimal_resolution(sub_model, 1))
    b_sub = chi_sub.shape[0]
    out = np.zeros((b_sub, chi_big.shape[0]), dtype=np.uint8)
    if b_sub == 0:
        return out
    # express each pulled-back character in the basis chi_sub
    table = {}
    for c in range(1 << b_sub):
        vals = np.zeros(sub_model.order, dtype=np.uint8)
        for i in range(b_sub):
            if c >> i & 1:
                vals ^= chi_sub[i]
        table[vals.tobytes()] = c
    for k in range(chi_big.shape[0]):
        pulled = chi_big[k][list(embedding)].astype(np.uint8)
        c = table[pulled.tobytes()]
        out[:, k] = _bits(c, b_sub)
    return out
