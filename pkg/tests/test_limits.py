from __future__ import annotations

import itertools

import numpy as np
import pytest

from f2quillen.f2la import F2Matrix, SubspaceBasis, rank
from f2quillen.groups import catalog_ids, get_group
from f2quillen.limits import (
    BudgetExceeded,
    CobarComplex,
    CoefficientSystem,
    ConsistencyError,
    coefficient_system,
    edge_map,
    family_category,
    higher_limits,
    limit0,
    nilpotence_check,
    power_in_image_check,
)
from f2quillen.ring import ring_table

SMALL = ["e", "C2", "C4", "C2xC2", "D8", "Q8", "C2xC4"]


def hom_count(cat, a, b):
    return len(cat.hom(a, b))


def unnormalized_limits(cs, s_max):
    """dim lim^s from the full cobar complex, identity morphisms included, as a dense oracle."""
    cat = cs.category
    strings = {0: [(a,) for a in range(len(cat.objects))]}
    for s in range(1, s_max + 2):
        strings[s] = [p + (m,) for p in strings[s - 1] for m in cat.out[_end(cat, p)]]
    index = {}
    for s, sts in strings.items():
        pos, table = 0, {}
        for st in sts:
            table[st] = pos
            pos += cs.value_dims[st[0]]
        index[s] = (table, pos)
    ranks = []
    for s in range(s_max + 1):
        src, cols = index[s]
        _, rows = index[s + 1]
        mat = np.zeros((rows, cols), dtype=np.uint8)
        r0 = 0
        for sigma in strings[s + 1]:
            a = sigma[0]
            dim = cs.value_dims[a]
            first = cat.morphisms[sigma[1]].target
            faces = [((first,) + sigma[2:], cs.matrices[sigma[1]])]
            for i in range(1, s + 1):
                faces.append((sigma[:i] + (cat.compose(sigma[i], sigma[i + 1]),) + sigma[i + 2:], None))
            faces.append((sigma[:-1], None))
            for tau, m in faces:
                d_tau = cs.value_dims[tau[0]]
                if d_tau == 0 or dim == 0:
                    continue
                off = src[tau]
                mat[r0:r0 + dim, off:off + d_tau] ^= m if m is not None else np.eye(dim, dtype=np.uint8)
            r0 += dim
        ranks.append(rank(F2Matrix.from_dense(mat)) if mat.size else 0)
    dims = []
    for s in range(s_max + 1):
        dims.append(index[s][1] - ranks[s] - (ranks[s - 1] if s else 0))
    return dims


def _end(cat, string):
    return string[0] if len(string) == 1 else cat.morphisms[string[-1]].target


# category -----------------------------------------------------------------------------

def test_cyclic_two_category():
    cat = family_category(get_group("C2"))
    assert [o.elements for o in cat.objects] == [(0,), (0, 1)]
    assert (hom_count(cat, 0, 0), hom_count(cat, 0, 1), hom_count(cat, 1, 1), hom_count(cat, 1, 0)) == (2, 1, 1, 0)


def test_quaternion_category():
    cat = family_category(get_group("Q8"))
    assert len(cat.objects) == 2
    assert (hom_count(cat, 0, 0), hom_count(cat, 0, 1), hom_count(cat, 1, 1)) == (8, 4, 4)


@pytest.mark.parametrize("gid", catalog_ids())
def test_category_structure(gid):
    g = get_group(gid)
    cat = family_category(g)
    assert cat.check_composition()
    # |Hom(H, K)| is the number of fixed points of H on G/K
    for a, h in enumerate(cat.objects):
        for b, k in enumerate(cat.objects):
            cosets = {frozenset(int(g.mul[x, y]) for y in k.elements) for x in range(g.order)}
            fixed = [c for c in cosets if all(frozenset(int(g.mul[z, y]) for y in c) == c for z in h.elements)]
            assert hom_count(cat, a, b) == len(fixed)
    top = cat.terminal_object()
    if g.is_abelian and all(o <= 2 for o in g.element_orders):
        assert top is not None and cat.objects[top].order == g.order
    else:
        # a proper subgroup of a 2-group has a nontrivial normalizer quotient
        assert top is None


# coefficient systems --------------------------------------------------------------------

def test_degree_zero_is_constant():
    for gid in SMALL + ["D8xC2"]:
        g = get_group(gid)
        cs = coefficient_system(g, 0, 4)
        assert set(cs.value_dims) == {1}
        assert all(np.array_equal(m, np.eye(1, dtype=np.uint8)) for m in cs.matrices)


def test_trivial_object_is_zero_in_positive_degree():
    g = get_group("D8")
    cs = coefficient_system(g, 3, 4)
    cat = cs.category
    assert cs.value_dims[0] == 0
    for m, f in enumerate(cat.morphisms):
        if f.target == 0 or f.source == 0:
            assert cs.matrices[m].size == 0


def test_quaternion_degree_one_values():
    g = get_group("Q8")
    cs = coefficient_system(g, 1, 4)
    assert cs.value_dims == [0, 1]
    for m in cs.category.hom(1, 1):
        assert np.array_equal(cs.matrices[m], np.eye(1, dtype=np.uint8))


@pytest.mark.parametrize("gid", ["D8", "Q8", "D8xC2", "SD16", "(C4xC2):C2"])
def test_coefficient_systems_are_functorial(gid):
    g = get_group(gid)
    for t in range(0, 5):
        cs = coefficient_system(g, t, 5, verify=False)
        cat = cs.category
        for m1, f in enumerate(cat.morphisms):
            for m2 in cat.out[f.target]:
                c = cat.compose(m1, m2)
                expected = (cs.matrices[m1].astype(int) @ cs.matrices[m2]) % 2
                assert np.array_equal(cs.matrices[c], expected)


def test_representative_independence():
    g = get_group("D8xC2")
    cs = coefficient_system(g, 2, 3)
    cat = cs.category
    # morphisms H -> K that induce the same map up to conjugation inside K share a matrix
    for a, b in itertools.product(range(len(cat.objects)), repeat=2):
        groups: dict[tuple, list[int]] = {}
        for m in cat.hom(a, b):
            x = cat.morphisms[m].rep
            xinv = int(g.inv[x])
            key = tuple(g.conj(xinv, h) for h in cat.objects[a].elements)
            groups.setdefault(key, []).append(m)
        for ms in groups.values():
            for m in ms[1:]:
                assert np.array_equal(cs.matrices[m], cs.matrices[ms[0]])


def test_broken_system_is_rejected():
    cat = family_category(get_group("C2"))
    base = CoefficientSystem.constant(cat)
    mats = [np.zeros((1, 1), dtype=np.uint8) if cat.is_identity(m) else np.eye(1, dtype=np.uint8) for m in range(len(cat.morphisms))]
    with pytest.raises(ConsistencyError):
        CoefficientSystem(cat, 0, base.value_dims, mats)


# lim0 and the edge map ---------------------------------------------------------------

@pytest.mark.parametrize("gid", ["C2", "C2xC2", "C2^3"])
def test_lim0_terminal_object(gid):
    g = get_group(gid)
    table = ring_table(g, 8)
    for t in range(9):
        assert limit0(coefficient_system(g, t, 8)).dim == table.dims[t]


def test_lim0_quaternion_and_zero():
    g = get_group("Q8")
    for t in range(1, 11):
        assert limit0(coefficient_system(g, t, 10)).dim == 1
    assert limit0(CoefficientSystem.zero(family_category(g))).dim == 0


def test_edge_map_elementary_abelian():
    for gid in ["C2", "C2xC2", "C2^3", "C2^4"]:
        g = get_group(gid)
        for t in range(1, 9):
            e = edge_map(g, t, 8)
            assert e.kernel_dim == 0 and e.rank == e.lim0.dim


def dihedral_presentation_dims(n):
    # F2[x, y, w]/(xy): monomials x^i w^k and y^j w^k with i, j >= 0 counted once for i = j = 0
    return [sum(1 if a == 0 else 2 for a in range(t + 1) if (t - a) % 2 == 0) for t in range(n + 1)]


def test_dihedral_kernel_zero():
    g = get_group("D8")
    n = 14
    dims = ring_table(g, n).dims
    assert list(dims) == dihedral_presentation_dims(n)
    for t in range(1, n + 1):
        e = edge_map(g, t, n)
        assert e.kernel_dim == 0


def test_quaternion_kernel_pattern():
    g = get_group("Q8")
    assert [edge_map(g, t, 8).kernel_dim for t in range(1, 9)] == [2, 2, 1, 0, 2, 2, 1, 0]


def test_edge_map_lands_in_lim0_everywhere():
    for gid in catalog_ids():
        g = get_group(gid)
        for t in range(0, 7):
            e = edge_map(g, t, 6)  # raises ConsistencyError otherwise
            coords = e.lim0_coordinates()
            assert coords.shape == (e.lim0.dim, e.matrix.shape[1])


# nilpotence -------------------------------------------------------------------------

def test_nilpotence_elementary_abelian():
    for gid in ["C2", "C2xC2", "C2^3"]:
        assert nilpotence_check(get_group(gid), 1, 10).verdict


def test_nilpotence_quaternion():
    g = get_group("Q8")
    assert nilpotence_check(g, 4, 14).verdict
    verdicts = [nilpotence_check(g, k, 14).verdict for k in (3, 4, 5)]
    for a, b in zip(verdicts, verdicts[1:]):
        assert b or not a


def test_quaternion_cube_of_kernel_is_not_zero():
    # In F2[x,y]/(x^2+xy+y^2, x^2 y+xy^2) the degree-3 part of the ideal is
    # span{x^3, y^3, x^2 y + x y^2}, so x^2 y survives; H^1 lies in the kernel.
    ideal = SubspaceBasis.span([0b1000 | 0b0100 | 0b0010, 0b0100 | 0b0010 | 0b0001, 0b0100 | 0b0010], 4)
    x2y = 0b0100  # basis x^3, x^2 y, x y^2, y^3 read from bit 3 down
    assert not ideal.contains(x2y)
    g = get_group("Q8")
    assert edge_map(g, 1, 14).kernel_dim == 2
    result = nilpotence_check(g, 3, 14)
    assert result.verdict is False
    assert result.stage_dims[2][3] == 1


def test_nilpotence_stage_dims_and_errors():
    g = get_group("C4")
    r = nilpotence_check(g, 2, 8)
    assert r.verdict and r.max_degree == 8 and len(r.stage_dims) == 2
    with pytest.raises(ValueError):
        nilpotence_check(g, 9, 8)


# powers ---------------------------------------------------------------------------------

def test_power_quaternion_fourth_power():
    r = power_in_image_check(get_group("Q8"), 2, 4)
    assert r.verdict and r.degrees == [1] and r.additivity_checked


def test_power_degree_zero_and_errors():
    g = get_group("D8")
    r = power_in_image_check(g, 0, 3)
    assert r.verdict
    with pytest.raises(ValueError):
        power_in_image_check(g, 3, 7)


def test_power_failure_detected_for_small_exponent():
    # for Q8 the degree-1 class of lim0 is not itself in the image
    r = power_in_image_check(get_group("Q8"), 0, 2)
    assert not r.verdict and r.failures


# higher limits ---------------------------------------------------------------------------

@pytest.mark.parametrize("gid", ["e", "C2", "C2xC2"])
def test_constant_functor_terminal_object(gid):
    cs = CoefficientSystem.constant(family_category(get_group(gid)))
    h = higher_limits(cs, 4)
    assert h.dims == [1, 0, 0, 0, 0] and h.dd_zero


def test_zero_functor():
    cs = CoefficientSystem.zero(family_category(get_group("D8")))
    assert higher_limits(cs, 4).dims == [0] * 5


@pytest.mark.parametrize("gid", ["C2", "C4", "C2xC2", "Q8", "D8"])
def test_normalized_matches_unnormalized(gid):
    g = get_group(gid)
    for t in (0, 1, 2):
        cs = coefficient_system(g, t, 4)
        s_max = 2 if g.order == 8 else 3
        assert higher_limits(cs, s_max).dims == unnormalized_limits(cs, s_max)


def test_cobar_h0_matches_equalizer():
    for gid in SMALL + ["SD16", "Q8xC2"]:
        g = get_group(gid)
        for t in range(0, 6):
            cs = coefficient_system(g, t, 6)
            assert higher_limits(cs, 0).dims[0] == limit0(cs).dim


def test_dense_and_sparse_differentials_agree():
    cs = coefficient_system(get_group("D8"), 1, 3)
    cx = CobarComplex(cs)
    for s in range(3):
        d = cx.differential(s)
        assert d.shape == (cx.count(s + 1), cx.count(s))
        assert rank(d) == cx.rank(s)
        if s:
            assert (d @ cx.differential(s - 1)).is_zero()


def test_budget_is_enforced():
    cs = CoefficientSystem.constant(family_category(get_group("C2^3")))
    with pytest.raises(BudgetExceeded) as info:
        higher_limits(cs, 4, budget=10_000)
    assert info.value.s == 1
    partial = higher_limits(cs, 4, budget=10_000, allow_partial=True)
    assert partial.skipped_from == 1 and partial.dims == [1]
    with pytest.raises(ValueError):
        higher_limits(cs, 7)
