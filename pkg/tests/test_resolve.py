from __future__ import annotations

import json

import numpy as np
import pytest

from f2quillen.f2la import F2Matrix, SubspaceBasis
from f2quillen.groups import build_group, catalog_ids, get_group, make_subgroup, subgroup_group
from f2quillen.resolve import (
    CACHE_VERSION,
    FreeModuleMap,
    LiftError,
    Resolution,
    ResolutionError,
    cache_path,
    clear_memo,
    cohomology_map,
    compose,
    lift_chain_map,
    map_words,
    load_cached,
    minimal_generators,
    minimal_resolution,
    store_cached,
    word_map_table,
)

ABELIAN_FACTORS = {
    "C2": ["C2"], "C4": ["C4"], "C8": ["C8"], "C16": ["C16"],
    "C2xC2": ["C2", "C2"], "C2xC4": ["C2", "C4"], "C2^3": ["C2"] * 3,
    "C4xC4": ["C4", "C4"], "C8xC2": ["C8", "C2"], "C2^2xC4": ["C2", "C2", "C4"], "C2^4": ["C2"] * 4,
}


def convolve(seqs, n):
    out = [1] + [0] * n
    for s in seqs:
        out = [sum(out[i] * s[t - i] for i in range(t + 1)) for t in range(n + 1)]
    return out


def q8_presentation_dims(n):
    # F2[x, y, e]/(x^2+xy+y^2, x^2 y+xy^2), |x| = |y| = 1, |e| = 4
    base = [1, 2, 2, 1]
    return [sum(base[t - 4 * j] for j in range(t // 4 + 1) if t - 4 * j < 4) for t in range(n + 1)]


def test_cyclic_two_is_periodic():
    assert list(minimal_resolution(get_group("C2"), 6).betti) == [1] * 7


def test_klein_four():
    assert list(minimal_resolution(get_group("C2xC2"), 5).betti) == [1, 2, 3, 4, 5, 6]


def test_quaternion_periodicity():
    assert q8_presentation_dims(8) == [1, 2, 2, 1, 1, 2, 2, 1, 1]
    assert list(minimal_resolution(get_group("Q8"), 8).betti) == q8_presentation_dims(8)


def test_trivial_group():
    res = minimal_resolution(get_group("e"), 5)
    assert list(res.betti) == [1, 0, 0, 0, 0, 0]
    res.verify()


@pytest.mark.parametrize("gid", sorted(ABELIAN_FACTORS))
def test_abelian_betti_convolution(gid):
    n = 14
    res = minimal_resolution(get_group(gid), n)
    assert list(res.betti) == convolve([[1] * (n + 1)] * len(ABELIAN_FACTORS[gid]), n)


@pytest.mark.parametrize("gid,factor", [("D8xC2", "D8"), ("Q8xC2", "Q8")])
def test_kunneth_with_c2(gid, factor):
    n = 14
    big = list(minimal_resolution(get_group(gid), n).betti)
    small = minimal_resolution(get_group(factor), n).betti
    assert big == [sum(small[: t + 1]) for t in range(n + 1)]


@pytest.mark.parametrize("gid", catalog_ids())
def test_invariants_hold(gid):
    res = minimal_resolution(get_group(gid), 10)
    res.verify()
    for i in range(1, 11):
        assert res.d(i).is_minimal()
    for i in range(1, 10):
        dd = compose(res.d(i), res.d(i + 1))
        assert not dd.blocks.any()


def test_minimal_generator_examples():
    c2 = get_group("C2")
    assert minimal_generators(c2, SubspaceBasis.zero(2)).nrows == 0
    ideal = SubspaceBasis.span([0b11], 2)
    assert minimal_generators(c2, ideal).nrows == 1
    v4 = get_group("C2xC2")
    aug = SubspaceBasis.span([1 | (1 << g) for g in range(1, 4)], 4)
    assert aug.dim == 3
    assert minimal_generators(v4, aug).nrows == 2


def test_minimal_generators_rejects_unstable_subspace():
    c2 = get_group("C2")
    with pytest.raises(ValueError):
        minimal_generators(c2, SubspaceBasis.span([0b01], 2))


def test_non_two_groups_rejected():
    c3 = build_group({"kind": "cyclic", "n": 3})
    with pytest.raises(ResolutionError):
        minimal_resolution(c3, 3)
    with pytest.raises(ResolutionError):
        minimal_resolution(get_group("C2"), 21)


def test_determinism():
    g = get_group("SD16")
    a = minimal_resolution(g, 9)
    clear_memo()
    b = minimal_resolution(g, 9)
    assert a is not b
    assert a.same_as(b)
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_truncation_matches_direct_computation():
    g = get_group("D8")
    clear_memo()
    long = minimal_resolution(g, 9)
    short = long.truncate(5)
    clear_memo()
    assert short.same_as(minimal_resolution(g, 5))


def test_cache_round_trip(tmp_path):
    g = get_group("Q8xC2")
    clear_memo()
    cold = minimal_resolution(g, 7)
    clear_memo()
    stored = minimal_resolution(g, 7, cache_dir=tmp_path)
    path = cache_path(g, 7, tmp_path)
    assert path.exists() and f"v{CACHE_VERSION}" in path.name
    doc = json.loads(path.read_text())
    assert doc["betti"] == list(cold.betti)
    clear_memo()
    warm = load_cached(g, 7, tmp_path)
    assert warm is not None and warm.same_as(cold) and stored.same_as(cold)


def test_cache_corruption_is_recomputed(tmp_path, caplog):
    g = get_group("C2xC4")
    clear_memo()
    res = minimal_resolution(g, 6)
    path = store_cached(res, tmp_path)
    path.write_text(path.read_text()[: 40])
    clear_memo()
    assert load_cached(g, 6, tmp_path) is None
    assert "unreadable cache file" in caplog.text
    again = minimal_resolution(g, 6, cache_dir=tmp_path)
    assert again.same_as(res)
    assert load_cached(g, 6, tmp_path) is not None


def test_cache_rejects_other_group(tmp_path):
    d8, q8 = get_group("D8"), get_group("Q8")
    path = store_cached(minimal_resolution(d8, 4), tmp_path)
    doc = json.loads(path.read_text())
    with pytest.raises((ValueError, KeyError)):
        Resolution.from_json(q8, doc)


def test_identity_lift():
    g = get_group("D8")
    res = minimal_resolution(g, 8)
    maps = lift_chain_map(res, res, np.array([[1]]), 6)
    assert maps[0].blocks.tolist() == [[1]]
    for i, f in enumerate(maps):
        assert np.array_equal(cohomology_map(f), np.eye(res.betti[i], dtype=np.uint8))
    for i in range(1, 7):
        assert compose(res.d(i), maps[i]) == compose(maps[i - 1], res.d(i))


def test_cup_lift_on_cyclic_two():
    g = get_group("C2")
    res = minimal_resolution(g, 8)
    maps = lift_chain_map(res, res, np.array([[1]]), 6, shift=1)
    for i, f in enumerate(maps):
        # a unit of F2[C2]: the identity or the generator
        assert f.blocks.tolist() in ([[1]], [[2]])
        if i:
            assert compose(res.d(i), f) == compose(maps[i - 1], res.d(i + 1))


def test_restriction_lift_c2_in_c4():
    c4 = get_group("C4")
    sub = make_subgroup(c4, [0, 2])
    c2 = subgroup_group(c4, sub)
    small, big = minimal_resolution(c2, 4), minimal_resolution(c4, 4)
    hom = list(sub.elements)
    maps = lift_chain_map(small, big, np.array([[1]]), 2, hom=hom)
    assert len(maps) == 3
    table = word_map_table(hom, 2)
    for i in range(1, 3):
        lhs = compose(big.d(i), maps[i])
        rhs = compose(maps[i - 1], FreeModuleMap(c4, map_words(small.d(i).blocks, table)))
        assert lhs == rhs


def test_lift_error_when_map_is_not_a_homomorphism():
    # C2 sent to an element of order 4 in C4: the degree-2 equation has no solution
    c2, c4 = get_group("C2"), get_group("C4")
    small, big = minimal_resolution(c2, 4), minimal_resolution(c4, 4)
    with pytest.raises(LiftError):
        lift_chain_map(small, big, np.array([[1]]), 3, hom=[0, 1])


def test_free_module_map_shapes():
    g = get_group("C2xC2")
    ident = FreeModuleMap.identity(g, 3)
    assert (ident.source_rank, ident.target_rank) == (3, 3)
    assert ident.induced() == F2Matrix.identity(12)
    z = FreeModuleMap.zero(g, 2, 5)
    assert z.induced().shape == (8, 20)
    with pytest.raises(ValueError):
        compose(z, FreeModuleMap.zero(g, 4, 3))
