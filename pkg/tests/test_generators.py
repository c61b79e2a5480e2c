from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripack.digraph import GraphError, edit_distance
from tripack.generators import (
    GBetaModel,
    blowup_c3,
    c3_model,
    complete_tripartite_digraph,
    disconnected_example,
    gen_gbeta,
    gen_random_regular_tournament,
    gen_random_regular_tripartite_digraph,
    gen_t_triangle,
    perturb,
    relabel_to_roles,
    reverse_random_cycles,
    rng_for,
)


def test_gbeta_zero_is_the_blowup():
    for seed in range(3):
        _, T = gen_gbeta(4, 0, seed)
        assert T.edges == blowup_c3(4).edges


def test_gbeta_half():
    model, T = gen_gbeta(4, Fraction(1, 2), 5)
    assert len(model.backward_v1) == 2
    deg_out = {x: 0 for x in model.v3}
    deg_in = {y: 0 for y in model.v2}
    for x, y in model.ccw_graph:
        deg_out[x] += 1
        deg_in[y] += 1
    assert set(deg_out.values()) == set(deg_in.values()) == {2}
    assert T.is_regular


def test_gbeta_third_is_regular():
    _, T = gen_gbeta(6, Fraction(1, 3), 2)
    assert T.regular_degree() == 6


def test_gbeta_rejects_bad_beta():
    with pytest.raises(GraphError):
        gen_gbeta(4, Fraction(3, 4), 0)
    with pytest.raises(GraphError):
        gen_gbeta(4, Fraction(1, 3), 0)


def test_model_validation():
    parts = blowup_c3(2).parts
    with pytest.raises(GraphError, match="partition"):
        GBetaModel(parts, frozenset({0}), frozenset(), Fraction(0), frozenset())
    with pytest.raises(GraphError, match="regular"):
        GBetaModel(parts, frozenset({0}), frozenset({1}), Fraction(1, 2), frozenset({(4, 2)}))


def test_random_regular_tournament():
    T = gen_random_regular_tournament(3, 4, steps=500)
    assert T.is_regular


def test_random_tournament_moves_edges():
    T = gen_random_regular_tournament(2, 9, steps=10_000)
    reversed_fraction = edit_distance(T, blowup_c3(2)) / (2 * 12)
    assert 0 < reversed_fraction < 1


def test_reversal_chain_keeps_regularity():
    for T in reverse_random_cycles(blowup_c3(3), 30, 1, every=5):
        assert T.is_regular


def test_random_regular_digraph():
    G = gen_random_regular_tripartite_digraph(4, 5, 3)
    assert G.regular_degree() == 5
    G = gen_random_regular_tripartite_digraph(2, 2, 0)
    assert G.regular_degree() == 2
    with pytest.raises(GraphError):
        gen_random_regular_tripartite_digraph(3, 7, 0)


def test_fixed_families():
    assert complete_tripartite_digraph(3).regular_degree() == 6
    D = disconnected_example(4)
    assert D.regular_degree() == 4
    with pytest.raises(GraphError):
        disconnected_example(3)


def test_perturb_forced_triangle():
    T = perturb(blowup_c3(4), 3, 0, edges=[(0, 4), (4, 8), (8, 0)])
    assert T.edges == gen_t_triangle(4).edges


def test_perturb_distance():
    T = gen_random_regular_tournament(3, 1)
    assert edit_distance(T, perturb(T, 5, 11)) == 10
    with pytest.raises(GraphError):
        perturb(T, 100, 0)


def test_seed_validation():
    with pytest.raises(ValueError):
        rng_for(-1)
    with pytest.raises(ValueError):
        rng_for(1 << 64)


def test_relabel_to_roles_is_an_isomorphism():
    model, T = gen_gbeta(4, Fraction(1, 4), 0)
    swapped = GBetaModel(model.parts, model.forward_v1, model.backward_v1, model.beta, model.ccw_graph, (1, 2, 3))
    T2, m2, perm = relabel_to_roles(T, swapped)
    assert {(perm[u], perm[v]) for u, v in T.edges} == T2.edges
    assert set(m2.edges()) == T2.edges
    assert c3_model(T.parts).tournament().edges == blowup_c3(4).edges


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10**6))
def test_gbeta_members_are_regular(n, seed):
    k = seed % (n // 2 + 1)
    model, T = gen_gbeta(n, Fraction(k, n), seed)
    assert T.is_regular
    assert set(model.edges()) == T.edges
