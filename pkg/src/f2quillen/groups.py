"""Small 2-groups as explicit multiplication tables.

Every group is a full ``order x order`` table of element indices with the
identity at index 0.  Groups are built from a :class:`GroupSpec`; the
catalog in ``data/catalog.json`` names the groups of order at most 16.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from math import gcd
from typing import Any, Iterable, Sequence

import numpy as np

MAX_ORDER = 64
CATALOG_FORMAT = "f2quillen-catalog"
CATALOG_VERSION = 1

SPEC_KINDS = ("cyclic", "direct", "semidirect", "central", "extension", "table")


class GroupError(ValueError):
    """Invalid group specification."""


@dataclass(frozen=True)
class GroupSpec:
    """How to build a group.

    ``kind`` is one of :data:`SPEC_KINDS`; ``params`` is the JSON-ready
    parameter dictionary.  Factor and base entries may be nested spec
    dictionaries or catalog ids.
    """

    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: Any) -> "GroupSpec":
        if isinstance(obj, GroupSpec):
            return obj
        if isinstance(obj, str):
            return catalog_spec(obj)
        obj = dict(obj)
        kind = obj.pop("kind")
        return cls(kind, obj)

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True, eq=False)
class Group:
    """A finite group given by its multiplication table.

    ``mul[a, b]`` is the index of the product ``a * b``.
    """

    id: str
    mul: np.ndarray
    spec: GroupSpec | None = None

    def __post_init__(self) -> None:
        self.mul.setflags(write=False)

    @property
    def order(self) -> int:
        return int(self.mul.shape[0])

    identity = 0

    def __repr__(self) -> str:
        return f"Group({self.id!r}, order={self.order})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Group):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.mul, other.mul)

    def __hash__(self) -> int:
        return hash((self.id, self.order))

    @cached_property
    def inv(self) -> np.ndarray:
        out = np.argmax(self.mul == 0, axis=1)
        out.setflags(write=False)
        return out

    @cached_property
    def element_orders(self) -> tuple[int, ...]:
        orders = []
        for a in range(self.order):
            k, x = 1, a
            while x != 0:
                x = int(self.mul[x, a])
                k += 1
            orders.append(k)
        return tuple(orders)

    def power(self, a: int, k: int) -> int:
        x = 0
        for _ in range(k % self.element_orders[a]):
            x = int(self.mul[x, a])
        return x

    def conj(self, x: int, a: int) -> int:
        """``x a x^-1``."""
        return int(self.mul[self.mul[x, a], self.inv[x]])

    def closure(self, gens: Iterable[int]) -> int:
        """Bitmask of the subgroup generated by ``gens``."""
        gens = [g for g in set(gens) if g != 0]
        mask = 1
        frontier = [0]
        mul = self.mul
        while frontier:
            nxt = []
            for a in frontier:
                row = mul[a]
                for s in gens:
                    b = int(row[s])
                    if not mask >> b & 1:
                        mask |= 1 << b
                        nxt.append(b)
            frontier = nxt
        return mask

    @cached_property
    def generators(self) -> tuple[int, ...]:
        """Greedy generating set: least element outside the span so far."""
        gens: list[int] = []
        mask = 1
        full = (1 << self.order) - 1
        for a in range(1, self.order):
            if mask == full:
                break
            if not mask >> a & 1:
                gens.append(a)
                mask = self.closure(gens)
        return tuple(gens)

    @cached_property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    @cached_property
    def left_perm_tables(self) -> np.ndarray:
        """``tab[g, p, v]``: word whose bits are ``g*h`` for the bits ``h`` of byte ``v`` at byte ``p``."""
        n = self.order
        nbytes = (n + 7) // 8
        tab = np.zeros((n, nbytes, 256), dtype=np.uint64)
        vals = np.arange(256)
        for p in range(nbytes):
            for q in range(8):
                h = 8 * p + q
                if h >= n:
                    break
                has = ((vals >> q) & 1).astype(bool)
                for g in range(n):
                    tab[g, p, has] |= np.uint64(1) << np.uint64(int(self.mul[g, h]))
        tab.setflags(write=False)
        return tab

    def validate(self) -> None:
        n = self.order
        mul = self.mul
        if mul.shape != (n, n):
            raise GroupError("table is not square")
        if mul.min() < 0 or mul.max() >= n:
            raise GroupError("table entries out of range")
        if not (np.array_equal(mul[0], np.arange(n)) and np.array_equal(mul[:, 0], np.arange(n))):
            raise GroupError("index 0 is not a two-sided identity")
        for row in mul:
            if len(set(row.tolist())) != n:
                raise GroupError("table is not a Latin square")
        left = mul[mul, :]  # left[a, b, c] = (a*b)*c
        right = mul[:, mul]  # right[a, b, c] = a*(b*c)
        if not np.array_equal(left, right):
            raise GroupError("table is not associative")


@dataclass(frozen=True, order=True)
class Subgroup:
    """A subgroup as a sorted tuple of element indices."""

    sort_key: tuple = field(init=False, repr=False, compare=True)
    elements: tuple[int, ...] = field(compare=False)
    rank: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sort_key", (len(self.elements), self.elements))

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def mask(self) -> int:
        m = 0
        for e in self.elements:
            m |= 1 << e
        return m

    def __contains__(self, a: int) -> bool:
        return a in self.elements

    def __len__(self) -> int:
        return len(self.elements)

    def __hash__(self) -> int:
        return hash(self.elements)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subgroup):
            return NotImplemented
        return self.elements == other.elements


def _mask_elements(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _ea_rank(g: Group, elements: Sequence[int]) -> int | None:
    orders = g.element_orders
    if any(orders[a] > 2 for a in elements):
        return None
    for a in elements:
        for b in elements:
            if g.mul[a, b] != g.mul[b, a]:
                return None
    return len(elements).bit_length() - 1


def make_subgroup(g: Group, elements: Iterable[int]) -> Subgroup:
    elems = tuple(sorted(set(int(e) for e in elements)))
    return Subgroup(elements=elems, rank=_ea_rank(g, elems))


# construction ------------------------------------------------------------

def _cyclic_table(n: int) -> np.ndarray:
    a = np.arange(n)
    return (a[:, None] + a[None, :]) % n


def _direct_table(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nb = a.shape[0], b.shape[0]
    idx_a = np.repeat(np.arange(na), nb)
    idx_b = np.tile(np.arange(nb), na)
    return a[idx_a[:, None], idx_a[None, :]] * nb + b[idx_b[:, None], idx_b[None, :]]


def _semidirect_table(m: int, k: int, r: int) -> np.ndarray:
    n = m * k
    mul = np.zeros((n, n), dtype=np.int64)
    rpow = [pow(r, j, m) for j in range(k)]
    for a1 in range(m):
        for b1 in range(k):
            for a2 in range(m):
                for b2 in range(k):
                    a = (a1 + rpow[b1] * a2) % m
                    b = (b1 + b2) % k
                    mul[a1 * k + b1, a2 * k + b2] = a * k + b
    return mul


def _extend_hom(src: np.ndarray, gens: Sequence[int], images: Sequence[int], dst: np.ndarray) -> list[int] | None:
    """Extend a generator assignment to a homomorphism src -> dst, or None."""
    n = src.shape[0]
    img = [-1] * n
    img[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for s, t in zip(gens, images):
                b = int(src[a, s])
                v = int(dst[img[a], t])
                if img[b] < 0:
                    img[b] = v
                    nxt.append(b)
                elif img[b] != v:
                    return None
        frontier = nxt
    if min(img) < 0:
        return None
    return img


def _extension_table(base: Group, k: int, action: Sequence[Sequence[int]], power: int) -> np.ndarray:
    if k < 1:
        raise GroupError("extension degree must be positive")
    gens = [int(a) for a, _ in action]
    images = [int(b) for _, b in action]
    if base.closure(gens) != (1 << base.order) - 1:
        raise GroupError("action must be given on a generating set of the base")
    phi = _extend_hom(base.mul, gens, images, base.mul)
    if phi is None or len(set(phi)) != base.order:
        raise GroupError("action is not an automorphism of the base")
    nb = base.order
    phis = [list(range(nb))]
    for _ in range(1, k):
        phis.append([phi[x] for x in phis[-1]])
    bm = base.mul
    n = nb * k
    mul = np.zeros((n, n), dtype=np.int64)
    for n1 in range(nb):
        for i in range(k):
            for n2 in range(nb):
                t = int(bm[n1, phis[i][n2]])
                for j in range(k):
                    e = i + j
                    if e >= k:
                        e -= k
                        v = int(bm[t, power])
                    else:
                        v = t
                    mul[n1 * k + i, n2 * k + j] = v * k + e
    return mul


def _central_table(g1: Group, g2: Group, pairs: Sequence[Sequence[int]]) -> np.ndarray:
    prod = Group("_prod", _direct_table(g1.mul, g2.mul))
    n2 = g2.order
    for a, b in pairs:
        a, b = int(a), int(b)
        if not all(g1.mul[a, x] == g1.mul[x, a] for x in range(g1.order)):
            raise GroupError(f"element {a} is not central in the first factor")
        if not all(g2.mul[b, x] == g2.mul[x, b] for x in range(n2)):
            raise GroupError(f"element {b} is not central in the second factor")
        if g1.element_orders[a] != g2.element_orders[b]:
            raise GroupError("identified elements have different orders")
    ident = prod.closure(int(a) * n2 + int(g2.inv[int(b)]) for a, b in pairs)
    zelems = _mask_elements(ident)
    for z in zelems:
        if z != 0 and (z % n2 == 0 or z // n2 == 0):
            raise GroupError("identification is not injective on a factor")
    rep_of = {}
    reps = []
    for x in range(prod.order):
        if x in rep_of:
            continue
        coset = [int(prod.mul[x, z]) for z in zelems]
        rep = min(coset)
        reps.append(rep)
        for c in coset:
            rep_of[c] = rep
    reps.sort()
    index = {r: i for i, r in enumerate(reps)}
    n = len(reps)
    mul = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(reps):
        for j, b in enumerate(reps):
            mul[i, j] = index[rep_of[int(prod.mul[a, b])]]
    return mul


def _table_for(spec: GroupSpec) -> np.ndarray:
    p = spec.params
    kind = spec.kind
    if kind == "cyclic":
        n = int(p["n"])
        if n < 1:
            raise GroupError("cyclic order must be positive")
        if n > MAX_ORDER:
            raise GroupError(f"order {n} exceeds {MAX_ORDER}")
        return _cyclic_table(n)
    if kind == "direct":
        factors = [build_group(f) for f in p["factors"]]
        size = int(np.prod([f.order for f in factors]))
        if size > MAX_ORDER:
            raise GroupError(f"order {size} exceeds {MAX_ORDER}")
        mul = factors[0].mul
        for f in factors[1:]:
            mul = _direct_table(mul, f.mul)
        return mul
    if kind == "semidirect":
        m, k, r = int(p["m"]), int(p["k"]), int(p["r"])
        if m * k > MAX_ORDER:
            raise GroupError(f"order {m * k} exceeds {MAX_ORDER}")
        if m < 1 or k < 1:
            raise GroupError("cyclic orders must be positive")
        if gcd(r, m) != 1 or pow(r, k, m) != 1 % m:
            raise GroupError(f"{r} does not define an action of C{k} on C{m}")
        return _semidirect_table(m, k, r)
    if kind == "central":
        g1, g2 = (build_group(f) for f in p["factors"])
        if g1.order * g2.order > MAX_ORDER * 64:
            raise GroupError("factors too large")
        mul = _central_table(g1, g2, p["identify"])
        if mul.shape[0] > MAX_ORDER:
            raise GroupError(f"order {mul.shape[0]} exceeds {MAX_ORDER}")
        return mul
    if kind == "extension":
        base = build_group(p["base"])
        k = int(p["k"])
        if base.order * k > MAX_ORDER:
            raise GroupError(f"order {base.order * k} exceeds {MAX_ORDER}")
        return _extension_table(base, k, p["action"], int(p.get("power", 0)))
    if kind == "table":
        mul = np.asarray(p["mul"], dtype=np.int64)
        if mul.shape[0] > MAX_ORDER:
            raise GroupError(f"order {mul.shape[0]} exceeds {MAX_ORDER}")
        return mul
    raise GroupError(f"unknown group kind {kind!r}")


def build_group(spec: GroupSpec | dict | str, id: str | None = None) -> Group:
    """Build and validate the group described by ``spec``.

    A string is looked up in the catalog.
    """
    if isinstance(spec, str):
        return get_group(spec)
    spec = GroupSpec.from_json(spec)
    mul = _table_for(spec).astype(np.int64)
    g = Group(id or _describe(spec), mul, spec)
    g.validate()
    return g


def _describe(spec: GroupSpec) -> str:
    return json.dumps(spec.to_json(), sort_keys=True, separators=(",", ":"))


# subgroup structure --------------------------------------------------------

def subgroups(g: Group) -> list[Subgroup]:
    """Every subgroup, sorted by size and then by element tuple."""
    cyclic: dict[int, int] = {}
    for a in range(g.order):
        m = g.closure([a])
        cyclic.setdefault(m, a)
    found: dict[int, tuple[int, ...]] = {1: ()}
    for m, a in cyclic.items():
        found.setdefault(m, (a,) if a else ())
    queue = list(found)
    while queue:
        h = queue.pop()
        gens = found[h]
        for c, a in cyclic.items():
            if c & ~h:
                j = g.closure(gens + (a,))
                if j not in found:
                    found[j] = gens + (a,)
                    queue.append(j)
    subs = [make_subgroup(g, _mask_elements(m)) for m in found]
    return sorted(subs)


def elementary_abelian_subgroups(g: Group) -> list[Subgroup]:
    """Abelian subgroups of exponent dividing 2, trivial subgroup included."""
    return [s for s in subgroups(g) if s.rank is not None]


def max_elementary_abelian_rank(g: Group) -> int:
    return max(s.rank for s in elementary_abelian_subgroups(g))


def conjugate(g: Group, s: Subgroup, x: int) -> Subgroup:
    """The subgroup x s x^-1."""
    return make_subgroup(g, (g.conj(x, a) for a in s.elements))


def center(g: Group) -> Subgroup:
    return make_subgroup(g, (a for a in range(g.order) if np.array_equal(g.mul[a], g.mul[:, a])))


def derived_subgroup(g: Group) -> Subgroup:
    comms = set()
    for a in range(g.order):
        for b in range(g.order):
            comms.add(int(g.mul[g.mul[a, b], g.inv[g.mul[b, a]]]))
    return make_subgroup(g, _mask_elements(g.closure(comms)))


def subgroup_group(g: Group, s: Subgroup, id: str | None = None) -> Group:
    """``s`` as a group in its own right; element i is ``s.elements[i]``."""
    index = {e: i for i, e in enumerate(s.elements)}
    n = len(s.elements)
    mul = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(s.elements):
        for j, b in enumerate(s.elements):
            mul[i, j] = index[int(g.mul[a, b])]
    return Group(id or f"{g.id}{list(s.elements)}", mul)


def order_census(g: Group) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(Counter(g.element_orders).items()))


def invariants(g: Group) -> tuple:
    """Isomorphism invariants used to tell catalog groups apart."""
    z = subgroup_group(g, center(g))
    d = subgroup_group(g, derived_subgroup(g))
    squares = {int(g.mul[a, a]) for a in range(g.order)}
    return (
        g.order,
        order_census(g),
        sum(1 for o in g.element_orders if o == 2),
        order_census(z),
        order_census(d),
        len(squares),
    )


def find_isomorphism(src: Group, dst: Group) -> tuple[int, ...] | None:
    """Lexicographically first isomorphism src -> dst on src's generators."""
    if src.order != dst.order or order_census(src) != order_census(dst):
        return None
    if np.array_equal(src.mul, dst.mul):
        return tuple(range(src.order))
    gens = src.generators
    sorders = src.element_orders
    dorders = dst.element_orders
    cands = [[b for b in range(dst.order) if dorders[b] == sorders[a]] for a in gens]

    def search(level: int, images: list[int]) -> list[int] | None:
        if level == len(gens):
            img = _extend_hom(src.mul, gens, images, dst.mul)
            if img is not None and len(set(img)) == dst.order:
                return img
            return None
        sub_gens = list(gens[: level + 1])
        for b in cands[level]:
            trial = images + [b]
            sub = _partial_hom(src, sub_gens, trial, dst)
            if sub is None:
                continue
            out = search(level + 1, trial)
            if out is not None:
                return out
        return None

    img = search(0, [])
    return tuple(img) if img is not None else None


def _partial_hom(src: Group, gens: Sequence[int], images: Sequence[int], dst: Group) -> dict[int, int] | None:
    """Injective homomorphic extension on the subgroup generated by ``gens``."""
    img = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for s, t in zip(gens, images):
                b = int(src.mul[a, s])
                v = int(dst.mul[img[a], t])
                if b not in img:
                    img[b] = v
                    nxt.append(b)
                elif img[b] != v:
                    return None
        frontier = nxt
    if len(set(img.values())) != len(img):
        return None
    return img


# catalog -------------------------------------------------------------------

@lru_cache(maxsize=1)
def load_catalog() -> dict[str, Any]:
    text = resources.files("f2quillen").joinpath("data/catalog.json").read_text(encoding="utf-8")
    doc = json.loads(text)
    if doc.get("format") != CATALOG_FORMAT or doc.get("version") != CATALOG_VERSION:
        raise GroupError("unsupported catalog file")
    return doc


def catalog_entries(order: int | None = None) -> list[dict[str, Any]]:
    entries = load_catalog()["groups"]
    if order is not None:
        entries = [e for e in entries if e["order"] == order]
    return list(entries)


def catalog_ids(order: int | None = None) -> list[str]:
    return [e["id"] for e in catalog_entries(order)]


def catalog_spec(id: str) -> GroupSpec:
    for e in load_catalog()["groups"]:
        if e["id"] == id:
            return GroupSpec.from_json(e["spec"])
    raise KeyError(f"unknown catalog group {id!r}")


@lru_cache(maxsize=None)
def get_group(id: str) -> Group:
    g = build_group(catalog_spec(id), id=id)
    return g


@lru_cache(maxsize=None)
def _catalog_invariants(order: int) -> list[tuple[str, tuple]]:
    return [(cid, invariants(get_group(cid))) for cid in catalog_ids(order)]


def identify(g: Group) -> tuple[str, tuple[int, ...]]:
    """Catalog model of ``g`` and an isomorphism model -> g.

    Groups with no catalog model are their own model.
    """
    inv = invariants(g)
    for cid, cinv in _catalog_invariants(g.order):
        if cinv != inv:
            continue
        iso = find_isomorphism(get_group(cid), g)
        if iso is not None:
            return cid, iso
    return g.id, tuple(range(g.order))
