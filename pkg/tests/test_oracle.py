from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripack.digraph import Digraph, EdgeClass, classify_edge, cycle_edges
from tripack.generators import blowup_c3, gen_gbeta, gen_t_triangle
from tripack.oracle import (
    OracleCapError,
    enumerate_hamilton_cycles,
    exact_expansion_check,
    exact_nearest_gbeta,
    is_hamiltonian,
    max_hamilton_packing_exact,
)
from tripack.structure import nearest_gbeta


def complete_digraph(m):
    return Digraph(m, [(u, v) for u in range(m) for v in range(m) if u != v])


def test_triangle_has_one_cycle():
    assert enumerate_hamilton_cycles(Digraph(3, [(0, 1), (1, 2), (2, 0)])) == [(0, 1, 2)]


def test_cycle_counts_frozen():
    assert len(enumerate_hamilton_cycles(complete_digraph(4))) == 6
    assert len(enumerate_hamilton_cycles(blowup_c3(2))) == 4


def test_limit_stops_early():
    assert len(enumerate_hamilton_cycles(complete_digraph(5), limit=3)) == 3
    assert is_hamiltonian(complete_digraph(5))
    assert not is_hamiltonian(Digraph(4, [(0, 1), (1, 0), (2, 3), (3, 2)]))


def test_tiny_graphs_have_no_cycles():
    assert enumerate_hamilton_cycles(Digraph(1, [])) == []


def test_packing_frozen():
    assert max_hamilton_packing_exact(blowup_c3(2))[0] == 1
    assert max_hamilton_packing_exact(blowup_c3(3))[0] == 3


def test_packing_cycles_are_disjoint():
    k, cycles = max_hamilton_packing_exact(complete_digraph(5))
    used = [e for c in cycles for e in cycle_edges(c)]
    assert k == len(cycles) == 4
    assert len(used) == len(set(used)) == 20


def test_ttriangle_packing_avoids_reversed_edge():
    T = gen_t_triangle(2)
    k, cycles = max_hamilton_packing_exact(T)
    assert k <= 1
    for c in cycles:
        assert all(classify_edge(T, e) is not EdgeClass.COUNTERCLOCKWISE for e in cycle_edges(c))


@pytest.mark.parametrize("n,beta", [(2, 0), (2, Fraction(1, 2)), (3, 0), (3, Fraction(1, 3))])
def test_gbeta_member_distance_zero(n, beta):
    _, T = gen_gbeta(n, beta, 0)
    assert exact_nearest_gbeta(T) == 0


def test_ttriangle_distance_bounded_and_below_heuristic():
    T = gen_t_triangle(2)
    d = exact_nearest_gbeta(T)
    assert d <= 6
    assert d <= nearest_gbeta(T).distance


def test_expansion_extremes():
    assert exact_expansion_check(complete_digraph(6), Fraction(1, 6), Fraction(1, 4))
    assert not exact_expansion_check(Digraph(6, []), Fraction(1, 6), Fraction(1, 4))


def test_caps():
    with pytest.raises(OracleCapError):
        enumerate_hamilton_cycles(Digraph(16, []))
    with pytest.raises(OracleCapError):
        max_hamilton_packing_exact(Digraph(13, []))
    with pytest.raises(OracleCapError):
        exact_nearest_gbeta(blowup_c3(4))
    with pytest.raises(OracleCapError):
        exact_expansion_check(Digraph(13, []), 0.1, 0.25)
    with pytest.raises(ValueError):
        exact_nearest_gbeta(Digraph(4, []))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 7), st.data())
def test_cycle_count_invariant_under_relabeling(m, data):
    edges = data.draw(st.sets(st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)).filter(lambda e: e[0] != e[1])))
    perm = data.draw(st.permutations(range(m)))
    g = Digraph(m, edges)
    h = Digraph(m, [(perm[u], perm[v]) for u, v in edges])
    assert len(enumerate_hamilton_cycles(g)) == len(enumerate_hamilton_cycles(h))
