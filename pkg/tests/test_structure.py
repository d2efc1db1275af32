import numpy as np
import pytest

from _oracles import finest_triangular_split, random_pattern, reachability_components
from appersist.model import DelaySystem
from appersist.signals import QuasiPeriodicSignal as Q
from appersist.structure import (
    BlockStructure,
    ZeroPattern,
    condense,
    index_sets,
    is_block_lower_triangular,
    is_irreducible_block,
    strongly_connected_components,
    zero_pattern,
)


def pattern(rows):
    return ZeroPattern.from_matrix(np.array(rows, dtype=bool))


def test_zero_pattern_examples():
    sys = DelaySystem(2, (1, 1), (1, 1), ((0, 0), (0, 0)), (2, 2), (1, 1))
    assert not zero_pattern(sys).as_array().any()
    sys = DelaySystem(2, (1, 1), (1, 1), ((0, 0), (Q.sin(0.25, 1.0, constant=0.5), 0)), (2, 2), (1, 1))
    assert zero_pattern(sys).nonzero == ((False, False), (True, False))
    assert zero_pattern(sys.translate(3.3)) == zero_pattern(sys)


def test_diagonal_ignored():
    assert pattern([[True, False], [False, True]]).nonzero == ((False, False), (False, False))


def test_condense_no_edges():
    b = condense(pattern(np.zeros((3, 3))))
    assert b.blocks == ((0,), (1,), (2,))
    assert b.permutation == (0, 1, 2)
    assert b.I == b.J == frozenset({0, 1, 2})


def test_condense_one_way_pair():
    p = pattern([[0, 0], [1, 0]])
    b = condense(p)
    assert b.blocks == ((0,), (1,))
    assert b.I == {0} and b.J == {1}


def test_condense_reversed_pair_reorders():
    p = pattern([[0, 1], [0, 0]])  # edge 1 -> 0
    b = condense(p)
    assert b.blocks == ((1,), (0,))
    assert b.I == {0} and b.J == {1}
    assert is_block_lower_triangular(p, b)


def test_condense_two_cycles():
    # 0 <-> 1, 2 <-> 3, and 1 -> 2
    m = np.zeros((4, 4), dtype=bool)
    m[1, 0] = m[0, 1] = m[3, 2] = m[2, 3] = m[2, 1] = True
    b = condense(pattern(m))
    assert b.blocks == ((0, 1), (2, 3))
    k, families = finest_triangular_split(m)
    assert k == 2
    assert families == {frozenset({frozenset({0, 1}), frozenset({2, 3})})}


def test_irreducible_single_block():
    m = np.ones((3, 3), dtype=bool)
    b = condense(pattern(m))
    assert b.k == 1 and b.I == b.J == frozenset({0})


def test_canonical_tie_break():
    # two independent sources 2 and 0 feeding 1
    p = pattern([[0, 0, 0], [1, 0, 1], [0, 0, 0]])
    assert condense(p).blocks == ((0,), (2,), (1,))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_condense_against_exhaustive_permutations(rng, n):
    for _ in range(15):
        m = random_pattern(rng, n)
        p = ZeroPattern.from_matrix(m)
        b = condense(p)
        k, families = finest_triangular_split(m)
        assert b.k == k
        got = frozenset(frozenset(blk) for blk in b.blocks)
        assert got in families
        assert got == reachability_components(m)
        assert is_block_lower_triangular(p, b)
        assert all(is_irreducible_block(p, blk) for blk in b.blocks)


def test_tarjan_matches_closure_on_larger_graphs(rng):
    for n in (10, 30, 60):
        m = random_pattern(rng, n, density=1.5 / n)
        succ = [list(np.flatnonzero(m[:, j])) for j in range(n)]
        comps = frozenset(frozenset(c) for c in strongly_connected_components(succ))
        assert comps == reachability_components(m)


def test_condense_idempotent_under_permutation(rng):
    for _ in range(30):
        n = int(rng.integers(2, 7))
        p = ZeroPattern.from_matrix(random_pattern(rng, n))
        perm = rng.permutation(n)
        b, bp = condense(p), condense(p.permuted(perm))
        mapped = frozenset(frozenset(int(perm[v]) for v in blk) for blk in bp.blocks)
        assert mapped == frozenset(frozenset(blk) for blk in b.blocks)
        # re-condensing the canonical form gives the identity ordering
        again = condense(p.permuted(b.permutation))
        assert again.permutation == tuple(range(n))


def test_index_sets_examples_and_errors():
    p = pattern([[0, 0], [1, 0]])
    b = condense(p)
    assert index_sets(b, p) == (frozenset({0}), frozenset({1}))
    wrong_order = BlockStructure((1, 0), ((1,), (0,)), frozenset(), frozenset())
    with pytest.raises(ValueError):
        index_sets(wrong_order, p)
    missing = BlockStructure((0,), ((0,),), frozenset(), frozenset())
    with pytest.raises(ValueError):
        index_sets(missing, p)


def test_index_sets_middle_block_in_neither():
    p = pattern([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    b = condense(p)
    assert b.I == {0} and b.J == {2}


def test_block_structure_roundtrip():
    b = condense(pattern([[0, 1, 0], [1, 0, 0], [1, 0, 0]]))
    assert BlockStructure.from_dict(b.to_dict()) == b
