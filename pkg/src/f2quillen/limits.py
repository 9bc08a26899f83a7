"""Limits over the orbit category on elementary abelian subgroups.

Objects are the elementary abelian subgroups of G, the trivial one
included.  A morphism H -> K is a coset xK with x^-1 H x inside K, stored
by its least element; it induces a -> x^-1 a x from H into K, and the
coefficient systems are contravariant: H^t(K) -> H^t(H).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .f2la import F2Matrix, SubspaceBasis, kernel_basis, rank
from .groups import Group, Subgroup, elementary_abelian_subgroups
from .ring import (
    CohomClass,
    GradedRingMap,
    RingTable,
    frobenius_power,
    restriction,
    ring_table,
    subgroup_map,
    subgroup_model,
)
from .resolve import DEFAULT_MAX_DEGREE

DEFAULT_S_MAX = 4
DEFAULT_BUDGET = 1 << 32
MAX_S = 6


class BudgetExceeded(RuntimeError):
    """A cobar differential needs more elimination storage than the budget allows."""

    def __init__(self, s: int, size: int, budget: int):
        super().__init__(f"cobar degree {s}: elimination bound of {size} bits exceeds the budget {budget}")
        self.s = s
        self.size = size
        self.budget = budget


class ConsistencyError(AssertionError):
    """An internal consistency check failed."""


def _rank(m: np.ndarray) -> int:
    if m.size == 0:
        return 0
    return rank(F2Matrix.from_dense(m))


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] == 0 or b.shape[1] == 0 or a.shape[1] == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
    return (F2Matrix.from_dense(a) @ F2Matrix.from_dense(b)).to_dense()


@dataclass(frozen=True)
class Morphism:
    source: int
    target: int
    rep: int


class FamilyCategory:
    """Full subcategory of the orbit category on the elementary abelian family."""

    def __init__(self, g: Group):
        self.group = g
        self.group_id = g.id
        self.objects: list[Subgroup] = elementary_abelian_subgroups(g)
        self.morphisms: list[Morphism] = []
        self._index: dict[tuple[int, int, int], int] = {}
        self.out: list[list[int]] = [[] for _ in self.objects]
        self.identities: list[int] = []
        masks = [o.mask for o in self.objects]
        for a, h in enumerate(self.objects):
            for b, k in enumerate(self.objects):
                if len(h) > len(k) or len(k) % len(h):
                    continue
                for rep in _coset_reps(g, k):
                    if all(masks[b] >> g.conj(int(g.inv[rep]), x) & 1 for x in h.elements):
                        idx = len(self.morphisms)
                        self.morphisms.append(Morphism(a, b, rep))
                        self._index[(a, b, rep)] = idx
                        self.out[a].append(idx)
        self.identities = [self._index[(a, a, 0)] for a in range(len(self.objects))]
        self._identity_set = set(self.identities)
        self._coset_rep: dict[tuple[int, int], int] = {}

    def __repr__(self) -> str:
        return f"FamilyCategory({self.group_id}, objects={len(self.objects)}, morphisms={len(self.morphisms)})"

    def hom(self, a: int, b: int) -> list[int]:
        return [m for m in self.out[a] if self.morphisms[m].target == b]

    def is_identity(self, m: int) -> bool:
        return m in self._identity_set

    def _rep(self, b: int, x: int) -> int:
        key = (b, x)
        if key not in self._coset_rep:
            g = self.group
            self._coset_rep[key] = min(int(g.mul[x, k]) for k in self.objects[b].elements)
        return self._coset_rep[key]

    def compose(self, m1: int, m2: int) -> int:
        """The composite H -> K -> L of m1 : H -> K and m2 : K -> L."""
        f, h = self.morphisms[m1], self.morphisms[m2]
        if f.target != h.source:
            raise ValueError("morphisms are not composable")
        x = int(self.group.mul[f.rep, h.rep])
        return self._index[(f.source, h.target, self._rep(h.target, x))]

    def check_composition(self) -> bool:
        """Identity laws and associativity over every composable triple."""
        for m in range(len(self.morphisms)):
            f = self.morphisms[m]
            if self.compose(self.identities[f.source], m) != m or self.compose(m, self.identities[f.target]) != m:
                return False
        comp: dict[tuple[int, int], int] = {}
        for m1 in range(len(self.morphisms)):
            for m2 in self.out[self.morphisms[m1].target]:
                comp[(m1, m2)] = self.compose(m1, m2)
        for (m1, m2), c12 in comp.items():
            for m3 in self.out[self.morphisms[m2].target]:
                if comp[(c12, m3)] != comp[(m1, comp[(m2, m3)])]:
                    return False
        return True

    def terminal_object(self) -> int | None:
        """An object receiving exactly one morphism from every object, if any."""
        n = len(self.objects)
        for b in range(n):
            if all(len(self.hom(a, b)) == 1 for a in range(n)):
                return b
        return None


def _coset_reps(g: Group, k: Subgroup) -> list[int]:
    seen = 0
    reps = []
    for x in range(g.order):
        if seen >> x & 1:
            continue
        reps.append(x)
        for a in k.elements:
            seen |= 1 << int(g.mul[x, a])
    return reps


_CATEGORIES: dict[str, FamilyCategory] = {}


def family_category(g: Group) -> FamilyCategory:
    if g.id not in _CATEGORIES:
        _CATEGORIES[g.id] = FamilyCategory(g)
    return _CATEGORIES[g.id]


# coefficient systems ----------------------------------------------------------

class FamilyData:
    """Ring maps for every morphism and restriction of one group, through degree n."""

    def __init__(self, g: Group, n: int, cache_dir=None):
        self.group = g
        self.max_degree = n
        self.category = family_category(g)
        self.cache_dir = cache_dir
        cat = self.category
        self.models = [subgroup_model(g, h) for h in cat.objects]
        self._maps: dict[int, GradedRingMap] = {}
        self._restrictions: dict[int, GradedRingMap] = {}

    def morphism_map(self, m: int) -> GradedRingMap:
        if m not in self._maps:
            cat = self.category
            f = cat.morphisms[m]
            self._maps[m] = subgroup_map(
                self.group, cat.objects[f.source], cat.objects[f.target], f.rep, self.max_degree, self.cache_dir
            )
        return self._maps[m]

    def restriction_map(self, a: int) -> GradedRingMap:
        if a not in self._restrictions:
            self._restrictions[a] = restriction(self.group, self.category.objects[a], self.max_degree, self.cache_dir)
        return self._restrictions[a]

    def ring(self, a: int) -> RingTable:
        return ring_table(self.models[a].model, self.max_degree, cache_dir=self.cache_dir)

    def value_dim(self, a: int, t: int) -> int:
        return int(self.restriction_map(a).matrix(t).shape[0])


_DATA: dict[tuple[str, int], FamilyData] = {}


def family_data(g: Group, n: int, cache_dir=None) -> FamilyData:
    for (gid, m), data in _DATA.items():
        if gid == g.id and m >= n:
            return data
    data = FamilyData(g, n, cache_dir)
    _DATA[(g.id, n)] = data
    return data


def clear_caches() -> None:
    _CATEGORIES.clear()
    _DATA.clear()


class CoefficientSystem:
    """Degree-t values and contravariant morphism matrices on a family category."""

    def __init__(
        self,
        category: FamilyCategory,
        degree: int,
        dims: Sequence[int],
        matrices: Sequence[np.ndarray],
        verify: bool = True,
        keys: Sequence[int] | None = None,
    ):
        self.category = category
        self.keys = list(keys) if keys is not None else list(range(len(matrices)))
        self.degree = degree
        self.value_dims = [int(d) for d in dims]
        self.matrices = [np.asarray(m, dtype=np.uint8) for m in matrices]
        self.offsets = np.concatenate([[0], np.cumsum(self.value_dims)]).astype(int).tolist()
        for m, f in zip(self.matrices, category.morphisms):
            if m.shape != (self.value_dims[f.source], self.value_dims[f.target]):
                raise ValueError("morphism matrix has the wrong shape")
        if verify:
            self.verify()

    @property
    def total_dim(self) -> int:
        return self.offsets[-1]

    def verify(self) -> None:
        cat = self.category
        for a, m in enumerate(cat.identities):
            if not np.array_equal(self.matrices[m], np.eye(self.value_dims[a], dtype=np.uint8)):
                raise ConsistencyError("identity morphism does not act as the identity")
        # morphisms sharing a key share a matrix, so each key triple is checked once
        seen = set()
        keys = self.keys
        for m1, f in enumerate(cat.morphisms):
            for m2 in cat.out[f.target]:
                c = cat.compose(m1, m2)
                triple = (keys[m1], keys[m2], keys[c])
                if triple in seen:
                    continue
                seen.add(triple)
                if not np.array_equal(self.matrices[c], _matmul(self.matrices[m1], self.matrices[m2])):
                    raise ConsistencyError("coefficient system is not functorial")

    @classmethod
    def constant(cls, category: FamilyCategory, dim: int = 1) -> "CoefficientSystem":
        eye = np.eye(dim, dtype=np.uint8)
        return cls(category, 0, [dim] * len(category.objects), [eye] * len(category.morphisms))

    @classmethod
    def zero(cls, category: FamilyCategory) -> "CoefficientSystem":
        z = np.zeros((0, 0), dtype=np.uint8)
        return cls(category, 0, [0] * len(category.objects), [z] * len(category.morphisms))


def coefficient_system(g: Group, t: int, n: int | None = None, cache_dir=None, verify: bool = True) -> CoefficientSystem:
    """H^t on the family of g; ring maps are computed through degree max(t, n)."""
    data = family_data(g, max(t, n or t), cache_dir)
    cat = data.category
    dims = [data.value_dim(a, t) for a in range(len(cat.objects))]
    maps = [data.morphism_map(m) for m in range(len(cat.morphisms))]
    ids: dict[int, int] = {}
    keys = [ids.setdefault(id(f), len(ids)) for f in maps]
    return CoefficientSystem(cat, t, dims, [f.matrix(t) for f in maps], verify=verify, keys=keys)


def limit0(cs: CoefficientSystem) -> SubspaceBasis:
    """Equalizer: tuples with phi^*(x_K) = x_H for every non-identity morphism."""
    cat = cs.category
    blocks = []
    for m, f in enumerate(cat.morphisms):
        if cat.is_identity(m) or cs.value_dims[f.source] == 0:
            continue
        row = np.zeros((cs.value_dims[f.source], cs.total_dim), dtype=np.uint8)
        s0, t0 = cs.offsets[f.source], cs.offsets[f.target]
        row[:, t0:t0 + cs.value_dims[f.target]] ^= cs.matrices[m]
        row[:, s0:s0 + cs.value_dims[f.source]] ^= np.eye(cs.value_dims[f.source], dtype=np.uint8)
        blocks.append(row)
    if not blocks:
        return SubspaceBasis.full(cs.total_dim)
    return kernel_basis(F2Matrix.from_dense(np.vstack(blocks)))


# cobar complex ---------------------------------------------------------------

class CobarComplex:
    """Normalized cochains on strings H_0 -> ... -> H_s of non-identity morphisms.

    A string is ``(a, m_1, ..., m_s)`` with ``a`` the source object; its
    cochain value lies in the value at ``a``.  Only strings with a nonzero
    source value are kept.
    """

    def __init__(self, cs: CoefficientSystem, budget: int = DEFAULT_BUDGET):
        self.cs = cs
        self.budget = budget
        cat = cs.category
        self._strings: dict[int, list[tuple[int, ...]]] = {}
        self._index: dict[int, dict[tuple[int, ...], int]] = {}
        self._rows: dict[int, list[tuple[int, ...]]] = {}
        self._nonid = [[m for m in cat.out[a] if not cat.is_identity(m)] for a in range(len(cat.objects))]

    def _target(self, string: tuple[int, ...]) -> int:
        if len(string) == 1:
            return string[0]
        return self.cs.category.morphisms[string[-1]].target

    def count(self, s: int) -> int:
        """dim C^s, computed without listing strings."""
        cat = self.cs.category
        n = len(cat.objects)
        ways = [1] * n  # strings of length 0 ending anywhere, counted from their start
        for _ in range(s):
            ways = [sum(ways[cat.morphisms[m].target] for m in self._nonid[a]) for a in range(n)]
        return sum(self.cs.value_dims[a] * ways[a] for a in range(n))

    def strings(self, s: int) -> list[tuple[int, ...]]:
        if s not in self._strings:
            if s == 0:
                out = [(a,) for a in range(len(self.cs.category.objects)) if self.cs.value_dims[a]]
            else:
                out = [p + (m,) for p in self.strings(s - 1) for m in self._nonid[self._target(p)]]
            self._strings[s] = out
            offs = {}
            pos = 0
            for st in out:
                offs[st] = pos
                pos += self.cs.value_dims[st[0]]
            self._index[s] = offs
        return self._strings[s]

    def elimination_size(self, s: int) -> int:
        """Worst-case pivot storage in bits for eliminating delta^s."""
        rows, cols = self.count(s + 1), self.count(s)
        return min(rows, cols) * cols

    def _check_budget(self, s: int) -> None:
        size = self.elimination_size(s)
        if size > self.budget:
            raise BudgetExceeded(s, size, self.budget)

    def sparse_rows(self, s: int) -> list[tuple[int, ...]]:
        """Rows of delta^s : C^s -> C^{s+1} as sorted column indices, one row per C^{s+1} coordinate."""
        if s in self._rows:
            return self._rows[s]
        self._check_budget(s)
        cs = self.cs
        cat = cs.category
        self.strings(s)
        index = self._index[s]
        nz = [[tuple(np.flatnonzero(row).tolist()) for row in m] for m in cs.matrices]
        out: list[tuple[int, ...]] = []
        for sigma in self.strings(s + 1):
            a = sigma[0]
            m1 = sigma[1]
            first = cat.morphisms[m1].target
            face0 = index[(first,) + sigma[2:]] if cs.value_dims[first] else None
            offs = []
            for i in range(1, s + 1):
                c = cat.compose(sigma[i], sigma[i + 1])
                if not cat.is_identity(c):
                    offs.append(index[sigma[:i] + (c,) + sigma[i + 2:]])
            offs.append(index[sigma[:-1]])
            for r in range(cs.value_dims[a]):
                cols: set[int] = set()
                if face0 is not None:
                    cols.symmetric_difference_update(face0 + c for c in nz[m1][r])
                for off in offs:
                    cols ^= {off + r}
                out.append(tuple(sorted(cols)))
        self._rows[s] = out
        return out

    def differential(self, s: int) -> F2Matrix:
        """delta^s as a dense (dim C^{s+1}) x (dim C^s) matrix acting on columns."""
        cols = self.count(s)
        return F2Matrix.from_rows([_row_int(r) for r in self.sparse_rows(s)], cols)

    def rank(self, s: int) -> int:
        """rank of delta^s by elimination on the highest set bit."""
        pivots: dict[int, int] = {}
        for r in self.sparse_rows(s):
            v = _row_int(r)
            while v:
                p = v.bit_length()
                q = pivots.get(p)
                if q is None:
                    pivots[p] = v
                    break
                v ^= q
        return len(pivots)

    def composite_vanishes(self, s: int) -> bool:
        """Whether delta^{s+1} delta^s = 0."""
        inner = self.sparse_rows(s)
        for row in self.sparse_rows(s + 1):
            acc: set[int] = set()
            for j in row:
                acc.symmetric_difference_update(inner[j])
            if acc:
                return False
        return True


def _row_int(cols: Sequence[int]) -> int:
    v = 0
    for c in cols:
        v |= 1 << c
    return v


@dataclass
class HigherLimits:
    dims: list[int]
    cochain_dims: list[int]
    ranks: list[int]
    dd_zero: bool
    skipped_from: int | None = None
    budget_error: str | None = None


def higher_limits(cs: CoefficientSystem, s_max: int = DEFAULT_S_MAX, budget: int = DEFAULT_BUDGET, allow_partial: bool = False) -> HigherLimits:
    """dim lim^s for 0 <= s <= s_max from the normalized cobar complex.

    With ``allow_partial`` an over-budget differential stops the computation
    and the remaining degrees are reported as skipped; otherwise
    :class:`BudgetExceeded` propagates.  ``dd_zero`` covers every pair of
    consecutive differentials that was computed.
    """
    if s_max < 0 or s_max > MAX_S:
        raise ValueError(f"s_max must lie in 0..{MAX_S}")
    cx = CobarComplex(cs, budget)
    dims_c = [cx.count(s) for s in range(s_max + 2)]
    ranks: list[int] = []
    dd_zero = True
    skipped = None
    err = None
    for s in range(s_max + 1):
        try:
            ranks.append(cx.rank(s))
        except BudgetExceeded as exc:
            if not allow_partial:
                raise
            skipped, err = s, str(exc)
            break
        if s > 0 and not cx.composite_vanishes(s - 1):
            dd_zero = False
        cx._rows.pop(s - 1, None)
    dims = []
    for s in range(len(ranks)):
        before = ranks[s - 1] if s > 0 else 0
        dims.append(dims_c[s] - ranks[s] - before)
    return HigherLimits(dims, dims_c[: s_max + 1], ranks, dd_zero, skipped, err)


# edge map and verdicts ---------------------------------------------------------

@dataclass
class EdgeData:
    degree: int
    matrix: np.ndarray
    lim0: SubspaceBasis
    rank: int
    kernel: SubspaceBasis

    @property
    def kernel_dim(self) -> int:
        return self.kernel.dim

    def lim0_coordinates(self) -> np.ndarray:
        """The edge map in the canonical basis of lim^0."""
        cols = []
        for k in range(self.matrix.shape[1]):
            v = _bits_to_int(self.matrix[:, k])
            c = self.lim0.coordinates(v)
            cols.append([(c >> i) & 1 for i in range(self.lim0.dim)])
        return np.array(cols, dtype=np.uint8).T.reshape(self.lim0.dim, self.matrix.shape[1])


def _bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for i in np.flatnonzero(bits):
        out |= 1 << int(i)
    return out


def _int_to_bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)


def edge_map(g: Group, t: int, n: int | None = None, cache_dir=None, cs: CoefficientSystem | None = None) -> EdgeData:
    """res-tilde in degree t: H^t(G) -> product of H^t(H), checked to land in lim^0."""
    data = family_data(g, max(t, n or t), cache_dir)
    cat = data.category
    blocks = [data.restriction_map(a).matrix(t) for a in range(len(cat.objects))]
    bt = blocks[0].shape[1] if blocks else 0
    mat = np.vstack(blocks) if blocks else np.zeros((0, bt), dtype=np.uint8)
    if cs is None:
        cs = coefficient_system(g, t, n, cache_dir)
    lim = limit0(cs)
    for k in range(mat.shape[1]):
        if not lim.contains(_bits_to_int(mat[:, k])):
            raise ConsistencyError(f"edge map leaves lim^0 in degree {t}")
    r = _rank(mat)
    ker = kernel_basis(F2Matrix.from_dense(mat)) if mat.size else SubspaceBasis.full(bt)
    return EdgeData(t, mat, lim, r, ker)


@dataclass
class NilpotenceResult:
    k: int
    max_degree: int
    verdict: bool
    stage_dims: list[dict[int, int]] = field(default_factory=list)


def nilpotence_check(g: Group, k: int, n: int = DEFAULT_MAX_DEGREE, cache_dir=None, kernels: dict[int, SubspaceBasis] | None = None) -> NilpotenceResult:
    """Whether every product of k kernel classes vanishes through degree n.

    ``stage_dims[i][d]`` is dim K^(i+1)_d, where K^(1) is the kernel of the
    edge map and K^(i+1)_d is spanned by products of kernel basis classes
    with K^(i).
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError("degree budget too small: k exceeds n")
    table = ring_table(g, n, cache_dir=cache_dir)
    if kernels is None:
        kernels = {t: edge_map(g, t, n, cache_dir).kernel for t in range(1, n + 1)}
    stage = {t: kernels[t] for t in range(1, n + 1)}
    stages = [{t: stage[t].dim for t in stage}]
    for _ in range(1, k):
        if all(b.dim == 0 for b in stage.values()):
            nxt = {t: SubspaceBasis.zero(table.dims[t]) for t in range(1, n + 1)}
        else:
            nxt = {}
            for d in range(1, n + 1):
                vecs = []
                for da in range(1, d):
                    db = d - da
                    ka, kb = kernels[da], stage[db]
                    if ka.dim == 0 or kb.dim == 0:
                        continue
                    for a in ka.basis:
                        left = table.left_matrix(CohomClass(g.id, da, a), db)  # (b_d, b_db)
                        bm = np.array([_int_to_bits(b, table.dims[db]) for b in kb.basis], dtype=np.uint8)
                        prods = _matmul(bm, left.T)
                        vecs.extend(_bits_to_int(row) for row in prods)
                nxt[d] = SubspaceBasis.span(vecs, table.dims[d])
        stage = nxt
        stages.append({t: stage[t].dim for t in stage})
    verdict = all(b.dim == 0 for b in stage.values())
    return NilpotenceResult(k, n, verdict, stages)


@dataclass
class PowerResult:
    e: int
    max_degree: int
    verdict: bool
    degrees: list[int]
    failures: list[tuple[int, int]]
    additivity_checked: bool


def frobenius_additivity_holds(table: RingTable, degree: int, e: int, trials: int = 8, seed: int = 0) -> bool:
    b = table.dims[degree]
    if b == 0 or degree * (1 << e) > table.max_degree:
        return True
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        u = int(rng.integers(0, 1 << b)) if b < 63 else int.from_bytes(rng.bytes((b + 7) // 8), "little") & ((1 << b) - 1)
        v = int(rng.integers(0, 1 << b)) if b < 63 else int.from_bytes(rng.bytes((b + 7) // 8), "little") & ((1 << b) - 1)
        cu, cv = CohomClass(table.group_id, degree, u), CohomClass(table.group_id, degree, v)
        lhs = frobenius_power(table, cu + cv, e)
        rhs = frobenius_power(table, cu, e) + frobenius_power(table, cv, e)
        if lhs != rhs:
            return False
    return True


def power_in_image_check(g: Group, e: int, n: int, cache_dir=None) -> PowerResult:
    """Whether v^(2^e) lies in the image of res-tilde for every v in lim^0 of degree t, t*2^e <= n."""
    if e < 0:
        raise ValueError("e must be non-negative")
    if n < (1 << e):
        raise ValueError("degree overflow: n < 2^e")
    data = family_data(g, n, cache_dir)
    cat = data.category
    degrees = list(range(1, n // (1 << e) + 1))
    failures = []
    additive = True
    for t in degrees:
        lim = limit0(coefficient_system(g, t, n, cache_dir))
        target = edge_map(g, t << e, n, cache_dir)
        image = SubspaceBasis.span(F2Matrix.from_dense(target.matrix.T)) if target.matrix.size else SubspaceBasis.zero(target.matrix.shape[0])
        cs_dims = [data.value_dim(a, t) for a in range(len(cat.objects))]
        for a in range(len(cat.objects)):
            if cs_dims[a]:
                additive &= frobenius_additivity_holds(data.ring(a), t, e)
        high_dims = [data.value_dim(a, t << e) for a in range(len(cat.objects))]
        high_offsets = np.concatenate([[0], np.cumsum(high_dims)]).astype(int).tolist()
        offsets = np.concatenate([[0], np.cumsum(cs_dims)]).astype(int).tolist()
        for i, v in enumerate(lim.basis):
            out = 0
            for a in range(len(cat.objects)):
                if not cs_dims[a]:
                    continue
                part = (v >> offsets[a]) & ((1 << cs_dims[a]) - 1)
                p = frobenius_power(data.ring(a), CohomClass(data.models[a].model.id, t, part), e)
                out |= p.coords << high_offsets[a]
            if not image.contains(out):
                failures.append((t, i))
    return PowerResult(e, n, not failures and additive, degrees, failures, additive)
